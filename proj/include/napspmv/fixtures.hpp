#pragma once

#include <string>
#include <vector>

#include "napspmv/csr.hpp"
#include "napspmv/partition.hpp"
#include "napspmv/topology.hpp"

namespace napspmv::fixtures {

/// Column pattern of the six-rank worked example, one row per rank.
inline const std::vector<std::vector<Index>>& example1_pattern() {
  static const std::vector<std::vector<Index>> rows{
      {0, 1, 3, 5}, {1, 4}, {2, 3}, {0, 1, 2, 3}, {0, 2, 4}, {0, 5},
  };
  return rows;
}

/// The 6x6 example matrix with A(i, j) = 10 i + j + 1 on its pattern.
inline CsrMatrix example1_matrix() {
  std::vector<Triplet> entries;
  const auto& rows = example1_pattern();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j : rows[i]) entries.push_back({static_cast<Index>(i), j, 10.0 * static_cast<double>(i) + j + 1.0});
  }
  return from_triplets(6, 6, std::move(entries));
}

inline Topology example1_topology() { return Topology(3, 2); }

inline Partition example1_partition() { return partition_contiguous(6, example1_topology()); }

inline bool is_known(const std::string& name) { return name == "example1"; }

}  // namespace napspmv::fixtures
