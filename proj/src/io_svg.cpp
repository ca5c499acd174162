#include "qtomo/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "qtomo/common.hpp"

namespace qtomo::io {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Extent {
  double lo = 0, hi = 1;
  void add(double v) {
    if (!std::isfinite(v)) throw IoError("chart data is not finite");
    if (empty) {
      lo = hi = v;
      empty = false;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  // A flat series still needs a nonzero span to map through.
  void finish() {
    if (empty) throw IoError("chart has no data points");
    if (hi - lo < 1e-300) {
      double pad = std::max(1.0, std::abs(hi)) * 0.5;
      lo -= pad;
      hi += pad;
    }
  }
  bool empty = true;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series) {
  if (series.empty()) throw IoError("chart needs at least one series");
  Extent ex, ey;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw IoError("chart series '" + s.label + "' is malformed");
    for (double v : s.x) ex.add(v);
    for (double v : s.y) ey.add(v);
  }
  ex.finish();
  ey.finish();

  auto px = [&](double v) {
    return kLeft + (v - ex.lo) / (ex.hi - ex.lo) * (kWidth - kLeft - kRight);
  };
  auto py = [&](double v) {
    return kHeight - kBottom - (v - ey.lo) / (ey.hi - ey.lo) * (kHeight - kTop - kBottom);
  };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << escape(title) << "</text>\n";

  // Axes with extent labels.
  double x0 = kLeft, x1 = kWidth - kRight;
  double y0 = kHeight - kBottom, y1 = kTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
      << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
      << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << x0 << "\" y=\"" << y0 + 18
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(ex.lo)
      << "</text>\n";
  out << "<text x=\"" << x1 << "\" y=\"" << y0 + 18
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(ex.hi) << "</text>\n";
  out << "<text x=\"" << x0 - 6 << "\" y=\"" << y0
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(ey.lo) << "</text>\n";
  out << "<text x=\"" << x0 - 6 << "\" y=\"" << y1 + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(ey.hi) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0) out << ' ';
      out << num(px(s.x[i])) << ',' << num(py(s.y[i]));
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    double ly = kTop + 14 * static_cast<double>(si);
    out << "<line x1=\"" << x1 - 90 << "\" y1=\"" << ly << "\" x2=\"" << x1 - 72
        << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << x1 - 68 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace qtomo::io
