#pragma once

#include <vector>

#include "napspmv/blocks.hpp"
#include "napspmv/comm_graph.hpp"
#include "napspmv/csr.hpp"
#include "napspmv/message_stats.hpp"
#include "napspmv/partition.hpp"

namespace napspmv {

/// Reference exchange: rank r sends D(r, t), the values it owns that rows of
/// rank t reference, directly to every t in P(r).
struct StandardPattern {
  CommGraph graph;

  [[nodiscard]] std::vector<Rank> destinations(Rank r) const { return graph.destinations(r); }
  [[nodiscard]] std::span<const Index> indices(Rank r, Rank t) const { return graph.indices(r, t); }
};

inline StandardPattern build_standard_pattern(const CsrMatrix& a, const Partition& part, const Topology& topo) {
  detail::require_square_partitioned(a, part, topo);
  CommGraphBuilder builder(topo.num_procs());
  detail::SeenFilter seen(a.ncols);
  for (Rank t = 0; t < topo.num_procs(); ++t) {
    for (Index i : part.rows_of(t)) {
      for (Index j : a.row_cols(i))
        if (seen.first(j, t)) builder.add(part.owner(j), t, j);
    }
  }
  return {std::move(builder).build()};
}

/// Message log of one standard exchange, without executing it.
inline MessageStats standard_message_stats(const StandardPattern& pat, const Topology& topo) {
  MessageStats stats;
  record_graph(stats, Phase::standard, pat.graph, topo);
  return stats;
}

}  // namespace napspmv
