#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mcao {

// Dense row-major float matrix as stored in "MCAM" files:
//   magic "MCAM", version u16, rows u32, cols u32, rows*cols little-endian f32.
struct MatrixFile {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;
};

inline constexpr std::uint16_t kMatrixFileVersion = 1;

void write_matrix(std::ostream& out, const MatrixFile& m);
MatrixFile read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const MatrixFile& m);
MatrixFile load_matrix(const std::filesystem::path& path);

namespace le {
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f32(std::ostream& out, float v);
std::uint16_t get_u16(const unsigned char* p);
std::uint32_t get_u32(const unsigned char* p);
std::uint64_t get_u64(const unsigned char* p);
float get_f32(const unsigned char* p);
}  // namespace le

}  // namespace mcao
