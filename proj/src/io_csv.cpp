#include "qtomo/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qtomo/common.hpp"

namespace qtomo::io {

namespace {

void check_cell(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw IoError("csv cell contains a separator: '" + s + "'");
}

void write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    check_cell(row[i]);
    if (i > 0) out << ',';
    out << row[i];
  }
  out << '\n';
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& c : table.comments) {
    if (c.find('\n') != std::string::npos)
      throw IoError("csv comment contains a newline");
    out << "# " << c << '\n';
  }
  write_row(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw IoError("csv row width does not match the header");
    write_row(out, row);
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.size() > 1 && line[1] == ' ' ? 2 : 1;
      table.comments.push_back(line.substr(start));
      continue;
    }
    std::vector<std::string> cells = split_row(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != table.header.size())
        throw IoError("csv row width does not match the header in " + path);
      table.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw IoError("csv file has no header: " + path);
  return table;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace qtomo::io
