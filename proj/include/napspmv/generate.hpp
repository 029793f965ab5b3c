#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "napspmv/csr.hpp"

namespace napspmv {

/// Seeded generator with a portable output sequence. The standard
/// distributions are implementation-defined, so bounded integers and unit
/// doubles are derived from the raw 64-bit stream here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Square matrix with exactly `nnz_per_row` distinct uniformly chosen columns
/// per row and values uniform in [0, 1). Identical arguments give a
/// bit-identical matrix.
inline CsrMatrix generate_random(Index nrows, Index nnz_per_row, std::uint64_t seed) {
  if (nrows < 0 || nnz_per_row < 0) throw std::invalid_argument("generate_random: negative size");
  if (nnz_per_row > nrows)
    throw std::invalid_argument("generate_random: nnz_per_row " + std::to_string(nnz_per_row) +
                                " exceeds row count " + std::to_string(nrows));
  Rng rng(seed);
  CsrMatrix m = CsrMatrix::empty(nrows, nrows);
  m.col_indices.reserve(static_cast<std::size_t>(nrows * nnz_per_row));
  m.values.reserve(static_cast<std::size_t>(nrows * nnz_per_row));
  std::vector<char> taken(static_cast<std::size_t>(nrows), 0);
  std::vector<Index> row;
  row.reserve(static_cast<std::size_t>(nnz_per_row));
  const auto n = static_cast<std::uint64_t>(nrows);
  for (Index i = 0; i < nrows; ++i) {
    row.clear();
    // Floyd's sampling without replacement
    for (std::uint64_t j = n - static_cast<std::uint64_t>(nnz_per_row); j < n; ++j) {
      auto t = static_cast<Index>(rng.below(j + 1));
      if (taken[static_cast<std::size_t>(t)]) t = static_cast<Index>(j);
      taken[static_cast<std::size_t>(t)] = 1;
      row.push_back(t);
    }
    std::sort(row.begin(), row.end());
    for (Index c : row) {
      taken[static_cast<std::size_t>(c)] = 0;
      m.col_indices.push_back(c);
      m.values.push_back(rng.unit());
    }
    m.row_offsets[static_cast<std::size_t>(i) + 1] = m.nnz();
  }
  return m;
}

/// Dense vector with entries uniform in [-1, 1).
inline std::vector<double> generate_vector(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = 2.0 * rng.unit() - 1.0;
  return v;
}

}  // namespace napspmv
