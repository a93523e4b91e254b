// Copyright 2026 The fockopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plain-text complex matrix format shared by every tool in the repo:
//
//   rows cols
//   re,im re,im ...      <- one line per row
//
// Entries are written with 17 significant digits, which round-trips doubles.

#pragma once

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fockopt/linalg.hpp"

namespace fockopt {

class MatrixFormatError : public std::runtime_error {
 public:
  explicit MatrixFormatError(const std::string& message) : std::runtime_error(message) {}
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline cplx parse_complex(const std::string& token) {
  const auto comma = token.find(',');
  if (comma == std::string::npos) throw MatrixFormatError("entry '" + token + "' is not of the form re,im");
  const std::string re = token.substr(0, comma);
  const std::string im = token.substr(comma + 1);
  auto parse = [&token](const std::string& s) {
    if (s.empty()) throw MatrixFormatError("entry '" + token + "' has an empty component");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
      throw MatrixFormatError("entry '" + token + "' is not numeric");
    return v;
  };
  return {parse(re), parse(im)};
}

inline void write_matrix(std::ostream& os, const CMatrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
    }
    os << '\n';
  }
}

inline std::string matrix_to_string(const CMatrix& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

inline CMatrix read_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw MatrixFormatError("missing header line");
  std::istringstream header(line);
  long rows = -1, cols = -1;
  if (!(header >> rows >> cols) || rows < 0 || cols < 0)
    throw MatrixFormatError("header must be 'rows cols', got '" + line + "'");
  CMatrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw MatrixFormatError("missing row " + std::to_string(i + 1));
    std::istringstream row(line);
    std::string token;
    long j = 0;
    while (row >> token) {
      if (j >= cols) throw MatrixFormatError("row " + std::to_string(i + 1) + " has too many entries");
      m(i, j++) = parse_complex(token);
    }
    if (j != cols) throw MatrixFormatError("row " + std::to_string(i + 1) + " has too few entries");
  }
  return m;
}

inline CMatrix matrix_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_matrix(is);
}

inline void save_matrix(const std::string& path, const CMatrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_matrix(os, m);
}

inline CMatrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_matrix(is);
}

}  // namespace fockopt
