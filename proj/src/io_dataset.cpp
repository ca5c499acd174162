#include "qtomo/io/dataset.hpp"

#include <fstream>
#include <vector>

#include "qtomo/io/binary.hpp"
#include "qtomo/io/crc32.hpp"

namespace qtomo::io {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'D', 'S'};

// One state's payload chunk: d*d (re, im) little-endian f64 pairs row-major.
std::vector<unsigned char> state_chunk(const ComplexMatrix& m) {
  const Eigen::Index d2 = m.size();
  std::vector<unsigned char> buf(static_cast<std::size_t>(d2) * 16);
  unsigned char* p = buf.data();
  for (Eigen::Index j = 0; j < d2; ++j) {
    const Complex& z = m.data()[j];
    std::uint64_t bits[2] = {std::bit_cast<std::uint64_t>(z.real()),
                             std::bit_cast<std::uint64_t>(z.imag())};
    for (int part = 0; part < 2; ++part)
      for (int i = 0; i < 8; ++i)
        *p++ = static_cast<unsigned char>((bits[part] >> (8 * i)) & 0xFFu);
  }
  return buf;
}

DatasetHeader read_header(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  for (int i = 0; i < 4; ++i)
    if (magic[i] != kMagic[i]) throw IoError("not a dataset file");
  DatasetHeader h{};
  h.version = get_u32(in);
  if (h.version != kDatasetVersion)
    throw IoError("unsupported dataset version " + std::to_string(h.version));
  h.n_qubits = get_u32(in);
  if (h.n_qubits < 1 || h.n_qubits > 16)
    throw IoError("dataset qubit count out of range");
  h.count = get_u64(in);
  return h;
}

}  // namespace

void write_dataset(const std::string& path, std::size_t n_qubits,
                   const std::vector<DensityMatrix>& states) {
  const Eigen::Index d = linalg::qubit_dim(n_qubits);
  for (const auto& rho : states)
    if (rho.n_qubits() != n_qubits)
      throw ShapeMismatch("dataset state does not match qubit count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  put_bytes(out, kMagic, 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(n_qubits));
  put_u64(out, states.size());
  std::uint32_t crc = 0;
  for (const auto& rho : states) {
    if (rho.dim() != d) throw ShapeMismatch("dataset state dimension mismatch");
    std::vector<unsigned char> chunk = state_chunk(rho.mat());
    crc = crc32_update(crc, chunk.data(), chunk.size());
    put_bytes(out, chunk.data(), chunk.size());
  }
  put_u32(out, crc);
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  DatasetHeader h = read_header(in);
  const Eigen::Index d = linalg::qubit_dim(h.n_qubits);
  const std::size_t chunk_len = static_cast<std::size_t>(d) * static_cast<std::size_t>(d) * 16;

  std::uint32_t crc = 0;
  std::vector<ComplexMatrix> raw;
  raw.reserve(static_cast<std::size_t>(h.count));
  std::vector<unsigned char> chunk(chunk_len);
  for (std::uint64_t s = 0; s < h.count; ++s) {
    get_bytes(in, chunk.data(), chunk_len);
    crc = crc32_update(crc, chunk.data(), chunk_len);
    ComplexMatrix m(d, d);
    const unsigned char* p = chunk.data();
    for (Eigen::Index j = 0; j < d * d; ++j) {
      std::uint64_t bits[2];
      for (int part = 0; part < 2; ++part) {
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        bits[part] = v;
        p += 8;
      }
      m.data()[j] = Complex(std::bit_cast<double>(bits[0]),
                            std::bit_cast<double>(bits[1]));
    }
    raw.push_back(std::move(m));
  }
  std::uint32_t stored = get_u32(in);
  if (stored != crc) throw IoError("dataset checksum mismatch in " + path);

  Dataset ds;
  ds.n_qubits = h.n_qubits;
  ds.states.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      ds.states.push_back(validate(raw[i]));
    } catch (const Error& e) {
      throw IoError("dataset state " + std::to_string(i) + " invalid: " + e.what());
    }
  }
  return ds;
}

DatasetHeader read_dataset_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_header(in);
}

}  // namespace qtomo::io
