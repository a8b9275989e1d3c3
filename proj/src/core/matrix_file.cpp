#include "mcao/core/matrix_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mcao/core/errors.hpp"

namespace mcao {

namespace le {

void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace le

void write_matrix(std::ostream& out, const MatrixFile& m) {
  if (m.values.size() != static_cast<std::size_t>(m.rows) * m.cols)
    throw UsageError("matrix payload does not match rows x cols");
  out.write("MCAM", 4);
  le::put_u16(out, kMatrixFileVersion);
  le::put_u32(out, m.rows);
  le::put_u32(out, m.cols);
  for (float v : m.values) le::put_f32(out, v);
  if (!out) throw std::runtime_error("matrix write failed");
}

MatrixFile read_matrix(std::istream& in) {
  unsigned char header[14];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw ParseError("truncated matrix header");
  if (std::memcmp(header, "MCAM", 4) != 0) throw ParseError("bad matrix magic");
  if (le::get_u16(header + 4) != kMatrixFileVersion) throw ParseError("unsupported matrix version");
  MatrixFile m;
  m.rows = le::get_u32(header + 6);
  m.cols = le::get_u32(header + 10);
  const std::size_t n = static_cast<std::size_t>(m.rows) * m.cols;
  std::vector<unsigned char> raw(n * 4);
  if (n > 0 && !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw ParseError("truncated matrix payload");
  m.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.values[i] = le::get_f32(raw.data() + 4 * i);
  return m;
}

void save_matrix(const std::filesystem::path& path, const MatrixFile& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_matrix(out, m);
}

MatrixFile load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open matrix file " + path.string());
  return read_matrix(in);
}

}  // namespace mcao
