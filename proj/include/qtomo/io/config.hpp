#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qtomo::io {

// Flat key=value run configuration. Files must carry a matching
// schema_version line; keys outside the allowed set are rejected so a typo
// never silently falls back to a default.
inline constexpr std::uint32_t kConfigSchemaVersion = 1;

// Returns the payload map (schema_version removed). '#' lines and blank
// lines are ignored; keys and values are whitespace-trimmed.
std::map<std::string, std::string> read_config(
    const std::string& path, const std::vector<std::string>& allowed_keys);

// Writes schema_version plus the given keys, one per line, sorted.
void write_config(const std::string& path,
                  const std::map<std::string, std::string>& values);

}  // namespace qtomo::io
