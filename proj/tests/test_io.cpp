#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "jacfast/binary_io.hpp"
#include "jacfast/error.hpp"

using namespace jacfast;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("jacfast_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

const std::vector<double> kValues{0.0, -1.5, 1e-300, 3.141592653589793, -2.5e17, 0.1 + 0.2,
                                  std::numeric_limits<double>::denorm_min()};

}  // namespace

TEST(Primitives, LittleEndianLayout) {
  std::ostringstream os;
  io::write_u32(os, 0x01020304u);
  io::write_u64(os, 0x0102030405060708ull);
  io::write_f64(os, 1.0);
  const std::string s = os.str();
  ASSERT_EQ(s.size(), 20u);
  EXPECT_EQ(static_cast<unsigned char>(s[0]), 0x04);
  EXPECT_EQ(static_cast<unsigned char>(s[3]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(s[4]), 0x08);
  EXPECT_EQ(static_cast<unsigned char>(s[19]), 0x3f);
  std::istringstream is(s);
  EXPECT_EQ(io::read_u32(is), 0x01020304u);
  EXPECT_EQ(io::read_u64(is), 0x0102030405060708ull);
  EXPECT_EQ(io::read_f64(is), 1.0);
  EXPECT_THROW(io::read_u32(is), IoError);
}

TEST(Primitives, Magic) {
  std::ostringstream os;
  io::write_magic(os, "JPAT");
  EXPECT_EQ(os.str(), "JPAT");
  std::istringstream good("JPAT"), bad("JTPL");
  EXPECT_NO_THROW(io::expect_magic(good, "JPAT"));
  EXPECT_THROW(io::expect_magic(bad, "JPAT"), IoError);
}

TEST_F(TempDir, VectorRoundTripRawAndCsv) {
  for (auto fmt : {io::VectorFormat::raw, io::VectorFormat::csv}) {
    const auto p = path(fmt == io::VectorFormat::raw ? "v.f64" : "v.csv");
    io::write_vector(p, kValues, fmt);
    EXPECT_EQ(io::read_vector(p, fmt), kValues);
  }
  EXPECT_EQ(fs::file_size(path("v.f64")), 8 * kValues.size());
}

TEST_F(TempDir, FormatFromExtension) {
  EXPECT_EQ(io::format_from_path("a/b.csv"), io::VectorFormat::csv);
  EXPECT_EQ(io::format_from_path("x.CSV"), io::VectorFormat::csv);
  EXPECT_EQ(io::format_from_path("x.f64"), io::VectorFormat::raw);
  EXPECT_EQ(io::format_from_path("noext"), io::VectorFormat::raw);
}

TEST_F(TempDir, CsvToleratesBlankLinesAndRejectsGarbage) {
  {
    std::ofstream f(path("a.csv"));
    f << "1.5\n\n  -2\r\n3e2\n";
  }
  EXPECT_EQ(io::read_vector(path("a.csv"), io::VectorFormat::csv), (std::vector<double>{1.5, -2.0, 300.0}));
  {
    std::ofstream f(path("b.csv"));
    f << "1.0\nabc\n";
  }
  EXPECT_THROW(io::read_vector(path("b.csv"), io::VectorFormat::csv), IoError);
}

TEST_F(TempDir, EmptyAndBadFiles) {
  { std::ofstream f(path("empty.f64")); }
  EXPECT_TRUE(io::read_vector(path("empty.f64"), io::VectorFormat::raw).empty());
  {
    std::ofstream f(path("odd.f64"), std::ios::binary);
    f << "12345";
  }
  EXPECT_THROW(io::read_vector(path("odd.f64"), io::VectorFormat::raw), IoError);
  EXPECT_THROW(io::read_vector(path("missing.f64"), io::VectorFormat::raw), IoError);
}

TEST_F(TempDir, TensorRoundTrip) {
  io::TensorData t{2, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9.25}};
  for (auto fmt : {io::VectorFormat::raw, io::VectorFormat::csv}) {
    const auto p = path(fmt == io::VectorFormat::raw ? "t.f64" : "t.csv");
    io::write_tensor(p, t, fmt);
    const auto back = io::read_tensor(p, fmt);
    EXPECT_EQ(back.dims, 2);
    EXPECT_EQ(back.n, 3);
    EXPECT_EQ(back.values, t.values);
  }
  EXPECT_EQ(fs::file_size(path("t.f64")), 8u + 8u * 9u);
}

TEST_F(TempDir, TensorRejectsInconsistentFiles) {
  io::TensorData t{2, 3, {1, 2, 3, 4, 5, 6, 7, 8}};  // one short
  io::write_tensor(path("short.f64"), t, io::VectorFormat::raw);
  EXPECT_THROW(io::read_tensor(path("short.f64"), io::VectorFormat::raw), IoError);
  io::write_tensor(path("short.csv"), t, io::VectorFormat::csv);
  EXPECT_THROW(io::read_tensor(path("short.csv"), io::VectorFormat::csv), IoError);
  t.values.push_back(9);
  t.values.push_back(10);
  io::write_tensor(path("long.f64"), t, io::VectorFormat::raw);
  EXPECT_THROW(io::read_tensor(path("long.f64"), io::VectorFormat::raw), IoError);
  io::TensorData d4{4, 2, std::vector<double>(16, 0.0)};
  io::write_tensor(path("d4.f64"), d4, io::VectorFormat::raw);
  EXPECT_THROW(io::read_tensor(path("d4.f64"), io::VectorFormat::raw), IoError);
  { std::ofstream f(path("empty.csv")); }
  EXPECT_THROW(io::read_tensor(path("empty.csv"), io::VectorFormat::csv), IoError);
}
