#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace napspmv {

using Index = std::int64_t;
using Rank = int;

/// Local process id and node id of a rank.
struct RankTuple {
  int local_proc = 0;
  int node = 0;

  friend bool operator==(const RankTuple&, const RankTuple&) = default;
};

/// Cluster shape: `num_nodes` full nodes of `ppn` processes each, ranks laid
/// out SMP-style (consecutive ranks share a node).
class Topology {
 public:
  Topology(int num_nodes, int ppn) : num_nodes_(num_nodes), ppn_(ppn) {
    if (num_nodes < 1 || ppn < 1) {
      throw std::invalid_argument("topology needs at least one node and one process per node (got " +
                                  std::to_string(num_nodes) + " nodes, ppn " + std::to_string(ppn) + ")");
    }
  }

  /// Builds a topology from a process count, rejecting partial nodes.
  static Topology from_procs(int num_procs, int ppn) {
    if (ppn < 1 || num_procs < 1 || num_procs % ppn != 0) {
      throw std::invalid_argument("process count " + std::to_string(num_procs) +
                                  " is not a positive multiple of ppn " + std::to_string(ppn));
    }
    return Topology(num_procs / ppn, ppn);
  }

  [[nodiscard]] int num_nodes() const noexcept { return num_nodes_; }
  [[nodiscard]] int ppn() const noexcept { return ppn_; }
  [[nodiscard]] int num_procs() const noexcept { return num_nodes_ * ppn_; }

  [[nodiscard]] int node_of(Rank r) const { return rank_to_tuple(r).node; }
  [[nodiscard]] int local_of(Rank r) const { return rank_to_tuple(r).local_proc; }
  [[nodiscard]] bool same_node(Rank a, Rank b) const { return node_of(a) == node_of(b); }

  /// First rank on `node`; the node's ranks are [first_rank, first_rank + ppn).
  [[nodiscard]] Rank first_rank(int node) const { return tuple_to_rank({0, node}); }

  [[nodiscard]] RankTuple rank_to_tuple(Rank r) const {
    if (r < 0 || r >= num_procs()) {
      throw std::out_of_range("rank " + std::to_string(r) + " outside [0, " + std::to_string(num_procs()) + ")");
    }
    return {r % ppn_, r / ppn_};
  }

  [[nodiscard]] Rank tuple_to_rank(RankTuple t) const {
    if (t.local_proc < 0 || t.local_proc >= ppn_ || t.node < 0 || t.node >= num_nodes_) {
      throw std::out_of_range("tuple (" + std::to_string(t.local_proc) + ", " + std::to_string(t.node) +
                              ") outside topology " + std::to_string(num_nodes_) + "x" + std::to_string(ppn_));
    }
    return t.node * ppn_ + t.local_proc;
  }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  int num_nodes_;
  int ppn_;
};

inline RankTuple rank_to_tuple(Rank r, const Topology& topo) { return topo.rank_to_tuple(r); }
inline Rank tuple_to_rank(RankTuple t, const Topology& topo) { return topo.tuple_to_rank(t); }

}  // namespace napspmv
