#include "jacfast/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "jacfast/error.hpp"

namespace jacfast::io {

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  if (!os) throw IoError("write failed");
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) throw IoError("unexpected end of file");
  return to_little(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    std::ostringstream os;
    os << path << ":" << line << ": not a number: '" << s << "'";
    throw IoError(os.str());
  }
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

void put_csv_value(std::ostream& os, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, ptr - buf);
  os.put('\n');
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put(os, v); }
void write_f64(std::ostream& os, double v) { put(os, std::bit_cast<std::uint64_t>(v)); }
void write_f64s(std::ostream& os, std::span<const double> v) {
  for (double x : v) write_f64(os, x);
}
void write_magic(std::ostream& os, const char (&magic)[5]) {
  os.write(magic, 4);
  if (!os) throw IoError("write failed");
}

std::uint32_t read_u32(std::istream& is) { return get<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get<std::uint64_t>(is)); }
void read_f64s(std::istream& is, std::span<double> out) {
  for (double& x : out) x = read_f64(is);
}
void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  is.read(buf, 4);
  if (is.gcount() != 4 || std::memcmp(buf, magic, 4) != 0) {
    throw IoError(std::string("bad magic, expected ") + magic);
  }
}

VectorFormat format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "csv" || ext == "txt") return VectorFormat::csv;
  }
  return VectorFormat::raw;
}

std::vector<double> read_vector(const std::string& path, VectorFormat fmt) {
  auto f = open_in(path);
  std::vector<double> v;
  if (fmt == VectorFormat::raw) {
    f.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(f.tellg());
    f.seekg(0);
    if (size % 8 != 0) throw IoError(path + ": raw f64 file size is not a multiple of 8");
    v.resize(size / 8);
    read_f64s(f, v);
    return v;
  }
  std::string line;
  std::size_t ln = 0;
  while (std::getline(f, line)) {
    ++ln;
    const auto s = trim(line);
    if (s.empty()) continue;
    v.push_back(parse_double(s, path, ln));
  }
  return v;
}

void write_vector(const std::string& path, std::span<const double> v, VectorFormat fmt) {
  auto f = open_out(path);
  if (fmt == VectorFormat::raw) {
    write_f64s(f, v);
  } else {
    for (double x : v) put_csv_value(f, x);
  }
  if (!f) throw IoError("write failed: " + path);
}

TensorData read_tensor(const std::string& path, VectorFormat fmt) {
  auto f = open_in(path);
  TensorData t;
  if (fmt == VectorFormat::raw) {
    t.dims = static_cast<int>(read_u32(f));
    t.n = read_u32(f);
  } else {
    std::string header;
    if (!std::getline(f, header)) throw IoError(path + ": empty tensor file");
    const auto comma = header.find(',');
    if (comma == std::string::npos) throw IoError(path + ": tensor CSV header must be 'dims,n'");
    t.dims = static_cast<int>(parse_double(trim(header.substr(0, comma)), path, 1));
    t.n = static_cast<std::int64_t>(parse_double(trim(header.substr(comma + 1)), path, 1));
  }
  if (t.dims < 1 || t.dims > 3 || t.n < 1) throw IoError(path + ": tensor header out of range");
  std::size_t count = 1;
  for (int d = 0; d < t.dims; ++d) count *= static_cast<std::size_t>(t.n);
  if (fmt == VectorFormat::raw) {
    t.values.resize(count);
    read_f64s(f, t.values);
    if (f.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes after tensor data");
  } else {
    std::string line;
    std::size_t ln = 1;
    while (std::getline(f, line)) {
      ++ln;
      const auto s = trim(line);
      if (!s.empty()) t.values.push_back(parse_double(s, path, ln));
    }
    if (t.values.size() != count) throw IoError(path + ": tensor CSV has the wrong number of values");
  }
  return t;
}

void write_tensor(const std::string& path, const TensorData& t, VectorFormat fmt) {
  auto f = open_out(path);
  if (fmt == VectorFormat::raw) {
    write_u32(f, static_cast<std::uint32_t>(t.dims));
    write_u32(f, static_cast<std::uint32_t>(t.n));
    write_f64s(f, t.values);
  } else {
    f << t.dims << ',' << t.n << '\n';
    for (double x : t.values) put_csv_value(f, x);
  }
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace jacfast::io
