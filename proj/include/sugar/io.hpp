#pragma once

#include "sugar/core.hpp"

#include <string>

namespace sugar {

// Binary (P5, 8 or 16 bit) or ASCII (P2) graymap as an n1×n2 image: rows are the
// first index. Values are returned on the file's own scale [0, maxval].
Mat read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Mat& image);  // clamped to [0, 255], 8 bit

// CSV matrix with a "rows,cols" header line.
void write_csv_matrix(const std::string& path, const Mat& m);
Mat read_csv_matrix(const std::string& path);

}  // namespace sugar
