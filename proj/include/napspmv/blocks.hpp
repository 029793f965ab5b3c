#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "napspmv/csr.hpp"
#include "napspmv/partition.hpp"
#include "napspmv/topology.hpp"

namespace napspmv {

enum class SplitMode { standard, node_aware };

/// Columns of `matrix` index into a receive buffer laid out as `col_map`
/// (ascending global column ids).
struct LocalBlock {
  CsrMatrix matrix;
  std::vector<Index> col_map;
};

/// A rank's rows split by where their column values live. In standard mode
/// everything non-local lands in `off_process`; in node-aware mode it is
/// divided between `on_node` and `off_node`. Unused blocks are empty.
struct LocalBlocks {
  SplitMode mode = SplitMode::standard;
  CsrMatrix on_process;  // columns are local row indices of the owning rank
  LocalBlock off_process;
  LocalBlock on_node;
  LocalBlock off_node;

  [[nodiscard]] Index nnz() const {
    return on_process.nnz() + off_process.matrix.nnz() + on_node.matrix.nnz() + off_node.matrix.nnz();
  }
};

namespace detail {

// Column positions shared by the remote blocks of one rank. Each global
// column lands in exactly one block, so one table serves all of them; it is
// reset after use.
struct ColumnScratch {
  std::vector<Index> pos;
  explicit ColumnScratch(Index ncols) : pos(static_cast<std::size_t>(ncols), -1) {}
};

struct BlockBuilder {
  std::vector<Triplet> entries;
  std::vector<Index> globals;

  void add(ColumnScratch& scratch, Index row, Index col, double value) {
    entries.push_back({row, col, value});
    auto& p = scratch.pos[static_cast<std::size_t>(col)];
    if (p == -1) {
      p = 0;
      globals.push_back(col);
    }
  }

  LocalBlock finish(Index nrows, ColumnScratch& scratch) {
    std::sort(globals.begin(), globals.end());
    for (std::size_t k = 0; k < globals.size(); ++k)
      scratch.pos[static_cast<std::size_t>(globals[k])] = static_cast<Index>(k);
    for (auto& t : entries) t.col = scratch.pos[static_cast<std::size_t>(t.col)];
    for (Index g : globals) scratch.pos[static_cast<std::size_t>(g)] = -1;
    const auto ncols = static_cast<Index>(globals.size());
    return {from_triplets(nrows, ncols, std::move(entries)), std::move(globals)};
  }
};

inline void require_square_partitioned(const CsrMatrix& a, const Partition& part, const Topology& topo) {
  if (a.nrows != a.ncols) throw std::invalid_argument("distributed SpMV needs a square matrix");
  if (part.size() != a.nrows) throw std::invalid_argument("partition size does not match matrix dimension");
  if (part.num_ranks() != topo.num_procs()) throw std::invalid_argument("partition rank count does not match topology");
}

}  // namespace detail

namespace detail {

inline LocalBlocks split_blocks(const CsrMatrix& a, const Partition& part, const Topology& topo, Rank rank,
                                SplitMode mode, ColumnScratch& scratch) {
  const auto rows = part.rows_of(rank);
  const auto nlocal = static_cast<Index>(rows.size());
  const int my_node = topo.node_of(rank);

  std::vector<Triplet> local_entries;
  BlockBuilder remote, near, far;
  for (Index li = 0; li < nlocal; ++li) {
    const Index i = rows[static_cast<std::size_t>(li)];
    auto cols = a.row_cols(i);
    auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const Index j = cols[k];
      const Rank owner = part.owner(j);
      if (owner == rank) {
        local_entries.push_back({li, part.local_index(j), vals[k]});
        continue;
      }
      auto& target = mode == SplitMode::standard ? remote : (topo.node_of(owner) == my_node ? near : far);
      target.add(scratch, li, j, vals[k]);
    }
  }

  LocalBlocks out;
  out.mode = mode;
  out.on_process = from_triplets(nlocal, nlocal, std::move(local_entries));
  out.off_process = remote.finish(nlocal, scratch);
  out.on_node = near.finish(nlocal, scratch);
  out.off_node = far.finish(nlocal, scratch);
  return out;
}

}  // namespace detail

/// Splits the rows owned by `rank` into on_process / off_process (standard)
/// or on_process / on_node / off_node (node-aware) blocks.
inline LocalBlocks split_blocks(const CsrMatrix& a, const Partition& part, const Topology& topo, Rank rank,
                                SplitMode mode) {
  detail::require_square_partitioned(a, part, topo);
  detail::ColumnScratch scratch(a.ncols);
  return detail::split_blocks(a, part, topo, rank, mode, scratch);
}

inline std::vector<LocalBlocks> split_all_blocks(const CsrMatrix& a, const Partition& part, const Topology& topo,
                                                 SplitMode mode) {
  detail::require_square_partitioned(a, part, topo);
  detail::ColumnScratch scratch(a.ncols);
  std::vector<LocalBlocks> out;
  out.reserve(static_cast<std::size_t>(topo.num_procs()));
  for (Rank r = 0; r < topo.num_procs(); ++r) out.push_back(detail::split_blocks(a, part, topo, r, mode, scratch));
  return out;
}

}  // namespace napspmv
