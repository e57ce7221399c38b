// SPDX-License-Identifier: Apache-2.0
#pragma once

// Text I/O helpers. Doubles are printed with std::to_chars (shortest
// round-trip form), so re-parsing a file recovers every value bit-exactly
// and output bytes do not depend on locale or thread count.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "cutsmc/errors.hpp"

namespace cutsmc {

inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, res.ptr);
}

inline double parse_double(const std::string& token) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  require(end != token.c_str() && *end == '\0', ErrorKind::io,
          "unparseable numeric token: '" + token + "'");
  return value;
}

/// Whitespace-delimited numeric matrix (one row per line, blank lines and
/// lines starting with '#' skipped). All rows must share a width.
inline std::vector<std::vector<double>> read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream parts(line);
    std::vector<double> row;
    std::string token;
    while (parts >> token) row.push_back(parse_double(token));
    if (row.empty()) continue;
    if (!rows.empty())
      require(row.size() == rows.front().size(), ErrorKind::io,
              "ragged matrix: inconsistent row width");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::vector<double>> read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open file: " + path);
  return read_matrix(in);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open file for writing: " + path);
  out << content;
  require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path);
}

}  // namespace cutsmc
