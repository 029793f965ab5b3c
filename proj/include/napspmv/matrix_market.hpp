#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "napspmv/csr.hpp"

namespace napspmv {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace detail

/// Reads a Matrix Market coordinate file (real, integer or pattern; general
/// or symmetric). Symmetric storage is expanded, duplicates are summed and
/// pattern entries get the value 1.0.
inline CsrMatrix parse_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++lineno;

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
  object = detail::lowercase(object);
  format = detail::lowercase(format);
  field = detail::lowercase(field);
  symmetry = detail::lowercase(symmetry);
  if (object != "matrix") throw ParseError(lineno, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(lineno, "only coordinate format is supported, got '" + format + "'");
  const bool pattern = field == "pattern";
  if (field != "real" && field != "integer" && !pattern)
    throw ParseError(lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(lineno, "unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  // size line, after comments
  Index nrows = -1, ncols = -1, nentries = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || detail::is_blank(line)) continue;
    std::istringstream ss(line);
    if (!(ss >> nrows >> ncols >> nentries) || nrows < 0 || ncols < 0 || nentries < 0)
      throw ParseError(lineno, "malformed size line");
    break;
  }
  if (nentries < 0) throw ParseError(lineno, "missing size line");
  if (symmetric && nrows != ncols) throw ParseError(lineno, "symmetric matrix must be square");

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(symmetric ? 2 * nentries : nentries));
  Index seen = 0;
  while (seen < nentries && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || detail::is_blank(line)) continue;
    std::istringstream ss(line);
    Index i = 0, j = 0;
    double v = 1.0;
    if (!(ss >> i >> j)) throw ParseError(lineno, "malformed entry");
    if (!pattern && !(ss >> v)) throw ParseError(lineno, "missing value");
    if (i < 1 || i > nrows || j < 1 || j > ncols)
      throw ParseError(lineno, "index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of bounds");
    entries.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
    ++seen;
  }
  if (seen < nentries)
    throw ParseError(lineno, "expected " + std::to_string(nentries) + " entries, found " + std::to_string(seen));
  return from_triplets(nrows, ncols, std::move(entries));
}

/// Writes `m` as a general real coordinate file with round-trip precision.
inline void write_matrix_market(std::ostream& out, const CsrMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.nrows << ' ' << m.ncols << ' ' << m.nnz() << '\n';
  char buf[64];
  for (Index i = 0; i < m.nrows; ++i) {
    auto cols = m.row_cols(i);
    auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", vals[k]);
      out << (i + 1) << ' ' << (cols[k] + 1) << ' ' << buf << '\n';
    }
  }
}

}  // namespace napspmv
