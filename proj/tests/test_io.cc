#include "sugar/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace sugar;

namespace {

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

void write_bytes(const std::string& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary);
  os << data;
}

}  // namespace

TEST(Io, Pgm8BitRoundTrip) {
  Mat img(3, 4);
  img << 0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 255;
  const auto p = tmp("sugar_io_8.pgm");
  write_pgm(p, img);
  EXPECT_EQ(read_pgm(p), img);
}

TEST(Io, Pgm16BitAndAscii) {
  std::string data = "P5\n# comment\n2 1\n65535\n";
  data += std::string("\x01\x00\xff\xff", 4);
  const auto p = tmp("sugar_io_16.pgm");
  write_bytes(p, data);
  const Mat m = read_pgm(p);
  ASSERT_EQ(m.rows(), 1);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m(0, 0), 256);
  EXPECT_EQ(m(0, 1), 65535);

  const auto a = tmp("sugar_io_ascii.pgm");
  write_bytes(a, "P2\n3 2\n15\n0 1 2\n3 4 15\n");
  const Mat b = read_pgm(a);
  EXPECT_EQ(b(1, 2), 15);
  EXPECT_EQ(b(0, 1), 1);
}

TEST(Io, PgmErrors) {
  EXPECT_THROW(read_pgm(tmp("does_not_exist.pgm")), IoError);
  const auto p = tmp("sugar_io_bad.pgm");
  write_bytes(p, "P6\n1 1\n255\nx");
  EXPECT_THROW(read_pgm(p), IoError);
  write_bytes(p, "P5\n4 4\n255\nabc");
  EXPECT_THROW(read_pgm(p), IoError);
  write_bytes(p, "P2\n2 1\n10\n3 11\n");
  EXPECT_THROW(read_pgm(p), IoError);
  write_bytes(p, "P5\nx 1\n255\n");
  EXPECT_THROW(read_pgm(p), IoError);
}

TEST(Io, CsvMatrixRoundTripIsExact) {
  Mat m(2, 3);
  m << 1.0 / 3, -2e-300, 7, 0.1, 1e300, -0.0;
  const auto p = tmp("sugar_io.csv");
  write_csv_matrix(p, m);
  std::ifstream is(p);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "2,3");
  EXPECT_EQ(read_csv_matrix(p), m);
}

TEST(Io, CsvErrors) {
  const auto p = tmp("sugar_io_bad.csv");
  write_bytes(p, "2;3\n1,2,3\n");
  EXPECT_THROW(read_csv_matrix(p), IoError);
  write_bytes(p, "2,2\n1,2\n");
  EXPECT_THROW(read_csv_matrix(p), IoError);
  write_bytes(p, "1,2\n1,x\n");
  EXPECT_THROW(read_csv_matrix(p), IoError);
  write_bytes(p, "1,2\n1,2,3\n");
  EXPECT_THROW(read_csv_matrix(p), IoError);
  EXPECT_THROW(write_csv_matrix("/nonexistent-dir/m.csv", Mat::Zero(1, 1)), IoError);
}
