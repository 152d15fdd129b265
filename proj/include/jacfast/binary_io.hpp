#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace jacfast::io {

// Little-endian primitives; throw IoError on short reads or failed writes.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f64s(std::ostream& os, std::span<const double> v);
void write_magic(std::ostream& os, const char (&magic)[5]);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
void read_f64s(std::istream& is, std::span<double> out);
void expect_magic(std::istream& is, const char (&magic)[5]);

// Vector files for the CLI: raw little-endian f64, or CSV with one value per line.
enum class VectorFormat { raw, csv };
VectorFormat format_from_path(const std::string& path);
std::vector<double> read_vector(const std::string& path, VectorFormat fmt);
void write_vector(const std::string& path, std::span<const double> v, VectorFormat fmt);

// Tensor files: raw format has an 8-byte header (u32 dims, u32 n) then n^dims
// f64 values, last axis fastest. CSV holds "dims,n" on the first line and
// one value per line after it.
struct TensorData {
  int dims = 1;
  std::int64_t n = 0;
  std::vector<double> values;
};
TensorData read_tensor(const std::string& path, VectorFormat fmt);
void write_tensor(const std::string& path, const TensorData& t, VectorFormat fmt);

}  // namespace jacfast::io
