#pragma once

#include <cstddef>
#include <cstdint>

namespace qtomo::io {

// IEEE CRC-32 (reflected polynomial 0xEDB88320), zlib-style streaming: start
// from 0 and feed chunks in order.
std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len);

inline std::uint32_t crc32(const void* data, std::size_t len) {
  return crc32_update(0, data, len);
}

}  // namespace qtomo::io
