#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "napspmv/topology.hpp"

namespace napspmv {

/// Compressed sparse row matrix in canonical form: columns strictly
/// increasing within each row. Explicit zeros are stored entries.
struct CsrMatrix {
  Index nrows = 0;
  Index ncols = 0;
  std::vector<Index> row_offsets{0};
  std::vector<Index> col_indices;
  std::vector<double> values;

  [[nodiscard]] Index nnz() const noexcept { return static_cast<Index>(col_indices.size()); }
  [[nodiscard]] Index row_begin(Index i) const { return row_offsets[static_cast<std::size_t>(i)]; }
  [[nodiscard]] Index row_end(Index i) const { return row_offsets[static_cast<std::size_t>(i) + 1]; }
  [[nodiscard]] Index row_degree(Index i) const { return row_end(i) - row_begin(i); }

  [[nodiscard]] std::span<const Index> row_cols(Index i) const {
    return std::span<const Index>(col_indices).subspan(static_cast<std::size_t>(row_begin(i)),
                                                       static_cast<std::size_t>(row_degree(i)));
  }
  [[nodiscard]] std::span<const double> row_values(Index i) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(row_begin(i)),
                                                   static_cast<std::size_t>(row_degree(i)));
  }

  /// Empty matrix with `rows` empty rows.
  static CsrMatrix empty(Index rows, Index cols) {
    CsrMatrix m;
    m.nrows = rows;
    m.ncols = cols;
    m.row_offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
    return m;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

/// Throws std::invalid_argument unless `m` satisfies the canonical CSR invariants.
inline void validate(const CsrMatrix& m) {
  if (m.nrows < 0 || m.ncols < 0) throw std::invalid_argument("negative matrix dimension");
  if (m.row_offsets.size() != static_cast<std::size_t>(m.nrows) + 1)
    throw std::invalid_argument("row_offsets length must be nrows + 1");
  if (m.row_offsets.front() != 0 || m.row_offsets.back() != m.nnz())
    throw std::invalid_argument("row_offsets must start at 0 and end at nnz");
  if (m.values.size() != m.col_indices.size()) throw std::invalid_argument("values/col_indices length mismatch");
  for (Index i = 0; i < m.nrows; ++i) {
    if (m.row_begin(i) > m.row_end(i)) throw std::invalid_argument("row_offsets must be non-decreasing");
    auto cols = m.row_cols(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] < 0 || cols[k] >= m.ncols)
        throw std::invalid_argument("column " + std::to_string(cols[k]) + " out of range in row " + std::to_string(i));
      if (k > 0 && cols[k - 1] >= cols[k])
        throw std::invalid_argument("columns not strictly increasing in row " + std::to_string(i));
    }
  }
}

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Builds a canonical CSR from coordinate entries. Duplicates are summed in
/// input order.
inline CsrMatrix from_triplets(Index nrows, Index ncols, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
      throw std::out_of_range("entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) + ") out of bounds");
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Triplet& a, const Triplet& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  CsrMatrix m = CsrMatrix::empty(nrows, ncols);
  m.col_indices.reserve(entries.size());
  m.values.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size();) {
    const auto& t = entries[k];
    double sum = 0.0;
    std::size_t e = k;
    for (; e < entries.size() && entries[e].row == t.row && entries[e].col == t.col; ++e) sum += entries[e].value;
    m.col_indices.push_back(t.col);
    m.values.push_back(sum);
    ++m.row_offsets[static_cast<std::size_t>(t.row) + 1];
    k = e;
  }
  for (std::size_t i = 1; i < m.row_offsets.size(); ++i) m.row_offsets[i] += m.row_offsets[i - 1];
  return m;
}

/// Entries of a distributed vector owned by one rank; `global_offset` is the
/// first global index for contiguous layouts and 0 otherwise.
struct DenseVector {
  std::vector<double> entries;
  Index global_offset = 0;
};

/// y[i] += sum_k block(i, k) * x[k]. Rows ascending, terms in stored column
/// order; results are bit-reproducible for identical inputs.
inline void local_spmv(const CsrMatrix& block, std::span<const double> x, std::span<double> y) {
  if (static_cast<Index>(x.size()) != block.ncols)
    throw std::invalid_argument("local_spmv: x has " + std::to_string(x.size()) + " entries, block has " +
                                std::to_string(block.ncols) + " columns");
  if (static_cast<Index>(y.size()) != block.nrows)
    throw std::invalid_argument("local_spmv: y has " + std::to_string(y.size()) + " entries, block has " +
                                std::to_string(block.nrows) + " rows");
  for (Index i = 0; i < block.nrows; ++i) {
    double acc = y[static_cast<std::size_t>(i)];
    for (Index k = block.row_begin(i); k < block.row_end(i); ++k) {
      acc += block.values[static_cast<std::size_t>(k)] *
             x[static_cast<std::size_t>(block.col_indices[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
}

/// Serial reference product w = A * v.
inline std::vector<double> run_serial_spmv(const CsrMatrix& a, std::span<const double> v) {
  std::vector<double> w(static_cast<std::size_t>(a.nrows), 0.0);
  local_spmv(a, v, w);
  return w;
}

}  // namespace napspmv
