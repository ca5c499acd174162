#pragma once

#include <string>
#include <vector>

namespace qtomo::io {

// Plain comma-separated table with '#' metadata lines before the header.
// Cells are stored verbatim; no quoting, so cells must not contain commas or
// newlines (writers enforce this).
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace qtomo::io
