#pragma once

// CSV ingestion and formatting: RFC-4180 style fields, '.' decimal point, no
// locale. Floats are printed with 17 significant digits so identical runs
// serialize byte-identically.

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ellreg/errors.hpp"

namespace ellreg {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, long row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      // tolerate CRLF line endings
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw validation_error("csv: unterminated quote at row " + std::to_string(row));
  fields.push_back(cur);
  return fields;
}

inline double parse_field(const std::string& field, long row, long col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    while (pos < field.size() && (field[pos] == ' ' || field[pos] == '\t')) ++pos;
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw validation_error("csv: cannot parse numeric field at row " + std::to_string(row) +
                           ", column " + std::to_string(col) + ": '" + field + "'");
  }
}

}  // namespace detail

/// Read a numeric CSV file into a matrix. Rows must be rectangular; parse
/// failures report the offending row and column (1-based, counting the
/// header row when skip_header is set).
inline Eigen::MatrixXd read_csv_matrix(const std::string& path, bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw validation_error("csv: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && skip_header) continue;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = detail::split_csv_line(line, lineno);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row.push_back(detail::parse_field(fields[c], lineno, static_cast<long>(c + 1)));
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw validation_error("csv: row " + std::to_string(lineno) + " in '" + path + "' has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(width));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw validation_error("csv: '" + path + "' contains no data rows");
  Eigen::MatrixXd M(static_cast<int>(rows.size()), static_cast<int>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) M(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  return M;
}

/// Read a one-column (or one-row) CSV file into a vector.
inline Eigen::VectorXd read_csv_vector(const std::string& path, bool skip_header = false) {
  const Eigen::MatrixXd M = read_csv_matrix(path, skip_header);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw validation_error("csv: '" + path + "' is " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + ", expected a single column or row");
}

inline void write_csv_matrix(std::ostream& out, const Eigen::MatrixXd& M) {
  for (int r = 0; r < M.rows(); ++r) {
    for (int c = 0; c < M.cols(); ++c) {
      if (c) out << ',';
      out << format_double(M(r, c));
    }
    out << '\n';
  }
}

}  // namespace ellreg
