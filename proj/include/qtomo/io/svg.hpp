#pragma once

#include <string>
#include <vector>

namespace qtomo::io {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;  // same length, at least one point
};

// Minimal line chart: axes with min/max labels, one polyline per series,
// legend. Linear scales over the joint data extent.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series);

}  // namespace qtomo::io
