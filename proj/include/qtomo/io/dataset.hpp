#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtomo/states.hpp"

namespace qtomo::io {

// Dataset file: magic "QTDS", u32 version, u32 n_qubits, u64 count, then per
// state 4^N complex entries row-major as little-endian f64 (re, im) pairs,
// then the CRC32 (u32) of the state payload.
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const std::string& path, std::size_t n_qubits,
                   const std::vector<DensityMatrix>& states);

struct Dataset {
  std::size_t n_qubits = 0;
  std::vector<DensityMatrix> states;
};

// Full load: checksum verified first, then every state re-validated.
Dataset read_dataset(const std::string& path);

struct DatasetHeader {
  std::uint32_t version;
  std::uint32_t n_qubits;
  std::uint64_t count;
};

// Header probe without reading the payload.
DatasetHeader read_dataset_header(const std::string& path);

}  // namespace qtomo::io
