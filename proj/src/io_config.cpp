#include "qtomo/io/config.hpp"

#include <algorithm>
#include <fstream>

#include "qtomo/common.hpp"

namespace qtomo::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> read_config(
    const std::string& path, const std::vector<std::string>& allowed_keys) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw IoError(path + ":" + std::to_string(line_no) + ": empty key");
    if (values.count(key))
      throw IoError(path + ": duplicate key '" + key + "'");
    values[key] = value;
  }

  auto sv = values.find("schema_version");
  if (sv == values.end())
    throw IoError(path + ": missing schema_version");
  if (sv->second != std::to_string(kConfigSchemaVersion))
    throw IoError(path + ": unsupported schema_version '" + sv->second + "'");
  values.erase(sv);

  for (const auto& [key, value] : values) {
    if (std::find(allowed_keys.begin(), allowed_keys.end(), key) == allowed_keys.end())
      throw IoError(path + ": unknown key '" + key + "'");
  }
  return values;
}

void write_config(const std::string& path,
                  const std::map<std::string, std::string>& values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "schema_version=" << kConfigSchemaVersion << '\n';
  for (const auto& [key, value] : values) {
    if (key == "schema_version") continue;
    out << key << '=' << value << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace qtomo::io
