#include "sugar/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sugar {

namespace {

// Next header token, skipping whitespace and '#' comments.
long pgm_token(std::istream& is, const std::string& path) {
  std::string tok;
  while (is) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  if (!(is >> tok)) throw IoError(path + ": truncated PGM header");
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size() || v <= 0) throw IoError(path + ": bad PGM header value '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    throw IoError(path + ": bad PGM header value '" + tok + "'");
  }
}

}  // namespace

Mat read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string magic(2, '\0');
  is.read(magic.data(), 2);
  if (!is || (magic != "P5" && magic != "P2")) throw IoError(path + ": not a P2/P5 graymap");
  const long width = pgm_token(is, path), height = pgm_token(is, path), maxval = pgm_token(is, path);
  if (maxval > 65535) throw IoError(path + ": maxval out of range");
  Mat img(height, width);
  if (magic == "P2") {
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) {
        long v;
        if (!(is >> v) || v < 0 || v > maxval) throw IoError(path + ": bad or missing pixel data");
        img(r, c) = double(v);
      }
    return img;
  }
  is.get();  // single whitespace after maxval
  const int bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(std::size_t(width * height * bytes));
  is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (is.gcount() != std::streamsize(buf.size())) throw IoError(path + ": truncated pixel data");
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) {
      const std::size_t k = std::size_t(r * width + c) * bytes;
      const unsigned v = bytes == 1 ? buf[k] : (unsigned(buf[k]) << 8) | buf[k + 1];
      if (long(v) > maxval) throw IoError(path + ": pixel exceeds maxval");
      img(r, c) = double(v);
    }
  return img;
}

void write_pgm(const std::string& path, const Mat& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c)
      os.put(char(static_cast<unsigned char>(std::clamp(std::lround(image(r, c)), 0L, 255L))));
  if (!os) throw IoError("write failed for " + path);
}

void write_csv_matrix(const std::string& path, const Mat& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << m.rows() << ',' << m.cols() << '\n' << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(r, c);
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

Mat read_csv_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::string line;
  long rows = -1, cols = -1;
  char comma = 0;
  if (!std::getline(is, line)) throw IoError(path + ": empty file");
  std::istringstream hs(line);
  if (!(hs >> rows >> comma >> cols) || comma != ',' || rows < 0 || cols < 0)
    throw IoError(path + ": expected a 'rows,cols' header");
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) throw IoError(path + ": missing row " + std::to_string(r));
    std::istringstream ls(line);
    std::string cell;
    long c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= cols) throw IoError(path + ": too many columns in row " + std::to_string(r));
      try {
        m(r, c++) = std::stod(cell);
      } catch (const std::logic_error&) {
        throw IoError(path + ": bad number '" + cell + "'");
      }
    }
    if (c != cols) throw IoError(path + ": too few columns in row " + std::to_string(r));
  }
  return m;
}

}  // namespace sugar
