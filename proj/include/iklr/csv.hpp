#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "iklr/types.hpp"

namespace iklr {

/// Renders a real at 17 significant decimal digits, enough for a bitwise
/// double round trip.
inline std::string format_real(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_real(std::string_view token, const std::string& where) {
  double value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin != end && *begin == '+') ++begin;  // from_chars rejects a leading plus
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end || begin == end) {
    throw std::runtime_error(where + ": cannot parse number '" + std::string(token) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

/// Reads a whole file into lines, stripping \r and a trailing blank line.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

/// Reads a dense comma-separated matrix. Lines starting with '#' are skipped.
template <typename Scalar = double>
Matrix<Scalar> read_csv_matrix(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::vector<std::vector<Scalar>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto fields = detail::split_fields(lines[i], ',');
    std::vector<Scalar> row;
    row.reserve(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string where = path + ":" + std::to_string(i + 1) + ":" + std::to_string(j + 1);
      row.push_back(static_cast<Scalar>(detail::parse_real(fields[j], where)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": row has " +
                               std::to_string(row.size()) + " fields, expected " +
                               std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Matrix<Scalar> out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

/// Writes a dense matrix as CSV at 17 significant digits. An optional comment
/// is emitted first as a '#' line.
template <typename Scalar>
void write_csv_matrix(const std::string& path, const Matrix<Scalar>& m, const std::string& comment = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (!comment.empty()) out << "# " << comment << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_real(static_cast<double>(m(i, j)));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace iklr
