#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "napspmv/blocks.hpp"
#include "napspmv/comm_graph.hpp"
#include "napspmv/csr.hpp"
#include "napspmv/message_stats.hpp"
#include "napspmv/partition.hpp"
#include "napspmv/topology.hpp"

namespace napspmv {

/// Node-level requirements: peers of `graph` are node ids. N(n) are the
/// destinations of node n and E(n, m) the deduplicated indices node n must
/// deliver to node m.
struct NodePattern {
  CommGraph graph;

  [[nodiscard]] int num_nodes() const noexcept { return graph.num_ranks(); }
  [[nodiscard]] std::vector<int> destinations(int n) const { return graph.destinations(n); }
  [[nodiscard]] std::span<const Index> indices(int n, int m) const { return graph.indices(n, m); }
};

/// Builds N and E from stored nonzeros: index j goes into E(n, m) when a row
/// on node m references column j owned on node n != m.
inline NodePattern build_node_pattern(const CsrMatrix& a, const Partition& part, const Topology& topo) {
  detail::require_square_partitioned(a, part, topo);
  CommGraphBuilder builder(topo.num_nodes());
  detail::SeenFilter seen(a.ncols);
  // ranks of a node are consecutive, so nodes come in runs
  for (Rank s = 0; s < topo.num_procs(); ++s) {
    const int m = topo.node_of(s);
    for (Index i : part.rows_of(s)) {
      for (Index j : a.row_cols(i)) {
        if (!seen.first(j, m)) continue;
        const int n = topo.node_of(part.owner(j));
        if (n != m) builder.add(n, m, j);
      }
    }
  }
  return {std::move(builder).build()};
}

/// Contiguous slice [begin, end) of E(n, dest_node) that one process sends.
struct SendChunk {
  int dest_node = 0;
  Index begin = 0;
  Index end = 0;

  friend bool operator==(const SendChunk&, const SendChunk&) = default;
};

/// Distribution of node-level traffic over local processes: T(rank) is
/// `send_map`, U(rank) is `recv_map`, and `send_chunks` records which part of
/// each E(n, m) a process carries.
struct NodeProcessMap {
  std::vector<std::vector<int>> send_map;
  std::vector<std::vector<int>> recv_map;
  std::vector<std::vector<SendChunk>> send_chunks;
};

struct AssignOptions {
  /// When a node has fewer destinations than processes, cut the largest
  /// payloads into contiguous chunks so that more processes send.
  bool split_short_lists = false;
};

namespace detail {

struct Candidate {
  int node;
  Index size;
};

// payload size descending, node id ascending
inline void sort_candidates(std::vector<Candidate>& c) {
  std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    return a.size != b.size ? a.size > b.size : a.node < b.node;
  });
}

// Number of pieces per candidate (sorted order) when splitting across ppn
// processes: start at one each, then repeatedly give another piece to the
// candidate with the largest per-piece payload.
inline std::vector<Index> split_counts(const std::vector<Candidate>& c, int ppn) {
  std::vector<Index> pieces(c.size(), 1);
  Index total = static_cast<Index>(c.size());
  while (total < ppn) {
    std::size_t best = c.size();
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (pieces[k] >= c[k].size) continue;
      // compare c[k].size / pieces[k] > c[best].size / pieces[best]
      if (best == c.size() || c[k].size * pieces[best] > c[best].size * pieces[k]) best = k;
    }
    if (best == c.size()) break;
    ++pieces[best];
    ++total;
  }
  return pieces;
}

inline void finalize_map(NodeProcessMap& map) {
  for (auto& chunks : map.send_chunks) {
    std::sort(chunks.begin(), chunks.end(), [](const SendChunk& a, const SendChunk& b) {
      return std::tie(a.dest_node, a.begin) < std::tie(b.dest_node, b.begin);
    });
  }
  map.send_map.assign(map.send_chunks.size(), {});
  for (std::size_t r = 0; r < map.send_chunks.size(); ++r) {
    for (const auto& c : map.send_chunks[r]) {
      auto& t = map.send_map[r];
      if (t.empty() || t.back() != c.dest_node) t.push_back(c.dest_node);
    }
  }
  for (auto& u : map.recv_map) std::sort(u.begin(), u.end());
}

}  // namespace detail

/// Assigns destination nodes to senders and source nodes to receivers.
/// Sends: destinations of node n ordered by |E(n, m)| descending (ties by
/// node id) go round-robin to local processes 0, 1, ..., ppn-1. Receives:
/// sources ordered the same way go round-robin to ppn-1, ppn-2, ..., 0.
inline NodeProcessMap assign_nodes_to_procs(const NodePattern& np, const Topology& topo, AssignOptions opts = {}) {
  if (np.num_nodes() != topo.num_nodes()) throw std::invalid_argument("node pattern does not match topology");
  const int ppn = topo.ppn();
  NodeProcessMap map;
  map.send_chunks.resize(static_cast<std::size_t>(topo.num_procs()));
  map.recv_map.resize(static_cast<std::size_t>(topo.num_procs()));

  for (int n = 0; n < topo.num_nodes(); ++n) {
    std::vector<detail::Candidate> dests;
    for (const auto& e : np.graph.sends[static_cast<std::size_t>(n)])
      dests.push_back({e.peer, static_cast<Index>(e.indices.size())});
    detail::sort_candidates(dests);

    if (opts.split_short_lists && !dests.empty() && static_cast<int>(dests.size()) < ppn) {
      const auto pieces = detail::split_counts(dests, ppn);
      struct Piece {
        SendChunk chunk;
        std::size_t order;
      };
      std::vector<Piece> all;
      for (std::size_t k = 0; k < dests.size(); ++k) {
        const Index size = dests[k].size;
        const Index base = size / pieces[k];
        const Index extra = size % pieces[k];
        Index begin = 0;
        for (Index c = 0; c < pieces[k]; ++c) {
          const Index len = base + (c < extra ? 1 : 0);
          all.push_back({{dests[k].node, begin, begin + len}, k});
          begin += len;
        }
      }
      std::stable_sort(all.begin(), all.end(), [](const Piece& a, const Piece& b) {
        const Index la = a.chunk.end - a.chunk.begin;
        const Index lb = b.chunk.end - b.chunk.begin;
        return la != lb ? la > lb : a.order < b.order;
      });
      for (std::size_t k = 0; k < all.size(); ++k) {
        const Rank r = topo.tuple_to_rank({static_cast<int>(k % static_cast<std::size_t>(ppn)), n});
        map.send_chunks[static_cast<std::size_t>(r)].push_back(all[k].chunk);
      }
    } else {
      for (std::size_t k = 0; k < dests.size(); ++k) {
        const Rank r = topo.tuple_to_rank({static_cast<int>(k % static_cast<std::size_t>(ppn)), n});
        map.send_chunks[static_cast<std::size_t>(r)].push_back({dests[k].node, 0, dests[k].size});
      }
    }

    std::vector<detail::Candidate> sources;
    for (const auto& e : np.graph.recvs[static_cast<std::size_t>(n)])
      sources.push_back({e.peer, static_cast<Index>(e.indices.size())});
    detail::sort_candidates(sources);
    for (std::size_t k = 0; k < sources.size(); ++k) {
      const int q = ppn - 1 - static_cast<int>(k % static_cast<std::size_t>(ppn));
      map.recv_map[static_cast<std::size_t>(topo.tuple_to_rank({q, n}))].push_back(sources[k].node);
    }
  }
  detail::finalize_map(map);
  return map;
}

/// Wraps explicit T and U tables (one node list per rank). Each node pair
/// must be covered by exactly one sender and one receiver; the sender carries
/// the whole of E(n, m).
inline NodeProcessMap make_node_process_map(const NodePattern& np, const Topology& topo,
                                            std::vector<std::vector<int>> send_map,
                                            std::vector<std::vector<int>> recv_map) {
  const auto nprocs = static_cast<std::size_t>(topo.num_procs());
  if (send_map.size() != nprocs || recv_map.size() != nprocs)
    throw std::invalid_argument("node-process map needs one entry per rank");
  const auto nn = static_cast<std::size_t>(topo.num_nodes());
  std::vector<int> senders(nn * nn, 0), receivers(nn * nn, 0);
  NodeProcessMap map;
  map.send_chunks.resize(nprocs);
  for (Rank r = 0; r < topo.num_procs(); ++r) {
    const int n = topo.node_of(r);
    for (int m : send_map[static_cast<std::size_t>(r)]) {
      const auto e = np.indices(n, m);
      if (e.empty())
        throw std::invalid_argument("rank " + std::to_string(r) + " assigned node " + std::to_string(m) +
                                    " outside N(" + std::to_string(n) + ")");
      ++senders[static_cast<std::size_t>(n) * nn + static_cast<std::size_t>(m)];
      map.send_chunks[static_cast<std::size_t>(r)].push_back({m, 0, static_cast<Index>(e.size())});
    }
    for (int src : recv_map[static_cast<std::size_t>(r)]) {
      if (np.indices(src, n).empty())
        throw std::invalid_argument("rank " + std::to_string(r) + " assigned source node " + std::to_string(src) +
                                    " that sends nothing to node " + std::to_string(n));
      ++receivers[static_cast<std::size_t>(src) * nn + static_cast<std::size_t>(n)];
    }
  }
  for (int n = 0; n < topo.num_nodes(); ++n) {
    for (int m : np.destinations(n)) {
      const auto k = static_cast<std::size_t>(n) * nn + static_cast<std::size_t>(m);
      if (senders[k] != 1 || receivers[k] != 1)
        throw std::invalid_argument("node pair " + std::to_string(n) + "->" + std::to_string(m) +
                                    " needs exactly one sender and one receiver");
    }
  }
  map.recv_map = std::move(recv_map);
  detail::finalize_map(map);
  return map;
}

/// Inter-node exchange: G and I as a rank-level graph. Every edge crosses nodes.
struct InterProcPattern {
  CommGraph graph;

  [[nodiscard]] std::vector<Rank> destinations(Rank r) const { return graph.destinations(r); }
  [[nodiscard]] std::span<const Index> indices(Rank src, Rank dst) const { return graph.indices(src, dst); }
};

/// Pairs each sender chunk with the unique receiver of its node pair.
inline InterProcPattern build_inter_proc_pattern(const NodePattern& np, const NodeProcessMap& map,
                                                 const Topology& topo) {
  const auto nn = static_cast<std::size_t>(topo.num_nodes());
  std::vector<Rank> receiver(nn * nn, -1);
  for (Rank q = 0; q < topo.num_procs(); ++q) {
    const int m = topo.node_of(q);
    for (int n : map.recv_map[static_cast<std::size_t>(q)]) {
      auto& slot = receiver[static_cast<std::size_t>(n) * nn + static_cast<std::size_t>(m)];
      if (slot != -1) throw std::logic_error("node pair has two receivers");
      slot = q;
    }
  }

  std::vector<Index> covered(nn * nn, 0);
  CommGraphBuilder builder(topo.num_procs());
  for (Rank p = 0; p < topo.num_procs(); ++p) {
    const int n = topo.node_of(p);
    for (const auto& c : map.send_chunks[static_cast<std::size_t>(p)]) {
      const auto k = static_cast<std::size_t>(n) * nn + static_cast<std::size_t>(c.dest_node);
      const Rank q = receiver[k];
      if (q == -1)
        throw std::logic_error("no receiver on node " + std::to_string(c.dest_node) + " for node " +
                               std::to_string(n));
      const auto e = np.indices(n, c.dest_node);
      if (c.begin < 0 || c.end > static_cast<Index>(e.size()) || c.begin >= c.end)
        throw std::logic_error("send chunk outside E(n, m)");
      for (Index k2 = c.begin; k2 < c.end; ++k2) builder.add(p, q, e[static_cast<std::size_t>(k2)]);
      covered[k] += c.end - c.begin;
    }
  }
  for (int n = 0; n < topo.num_nodes(); ++n) {
    for (const auto& e : np.graph.sends[static_cast<std::size_t>(n)]) {
      if (covered[static_cast<std::size_t>(n) * nn + static_cast<std::size_t>(e.peer)] !=
          static_cast<Index>(e.indices.size()))
        throw std::logic_error("E(" + std::to_string(n) + ", " + std::to_string(e.peer) +
                               ") not covered exactly once by send chunks");
    }
  }
  InterProcPattern ip{std::move(builder).build()};
  for (Rank p = 0; p < topo.num_procs(); ++p) {
    for (const auto& e : ip.graph.sends[static_cast<std::size_t>(p)]) {
      if (topo.same_node(p, e.peer)) throw std::logic_error("inter-node edge between ranks on one node");
    }
  }
  return ip;
}

/// Origin and final destination of values moved by an intra-node exchange.
enum class Locality { on_node_to_off_node, off_node_to_on_node, on_node_to_on_node };

inline const char* to_string(Locality l) {
  switch (l) {
    case Locality::on_node_to_off_node: return "on_node->off_node";
    case Locality::off_node_to_on_node: return "off_node->on_node";
    case Locality::on_node_to_on_node: return "on_node->on_node";
  }
  return "?";
}

inline Phase phase_of(Locality l) {
  switch (l) {
    case Locality::on_node_to_off_node: return Phase::local_initial;
    case Locality::off_node_to_on_node: return Phase::local_dist;
    case Locality::on_node_to_on_node: return Phase::fully_local;
  }
  return Phase::fully_local;
}

/// Intra-node exchange (L and J) for one locality tuple.
struct LocalPattern {
  Locality locality = Locality::on_node_to_on_node;
  CommGraph graph;

  [[nodiscard]] std::vector<Rank> destinations(Rank r) const { return graph.destinations(r); }
  [[nodiscard]] std::span<const Index> indices(Rank src, Rank dst) const { return graph.indices(src, dst); }
};

namespace detail {

// (column, rank) pairs for the off-node columns of every rank on each node,
// sorted per node.
inline std::vector<std::vector<std::pair<Index, Rank>>> off_node_consumers(const CsrMatrix& a, const Partition& part,
                                                                           const Topology& topo) {
  std::vector<std::vector<std::pair<Index, Rank>>> by_node(static_cast<std::size_t>(topo.num_nodes()));
  SeenFilter seen(a.ncols);
  for (Rank s = 0; s < topo.num_procs(); ++s) {
    const int m = topo.node_of(s);
    auto& list = by_node[static_cast<std::size_t>(m)];
    for (Index i : part.rows_of(s)) {
      for (Index j : a.row_cols(i)) {
        if (seen.first(j, s) && topo.node_of(part.owner(j)) != m) list.emplace_back(j, s);
      }
    }
  }
  for (auto& list : by_node) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return by_node;
}

}  // namespace detail

/// Builds the intra-node exchange for `locality`:
///  - on_node->off_node: owners hand values to the process that sends them
///    inter-node;
///  - off_node->on_node: inter-node receivers pass values on to the local
///    processes whose rows reference them;
///  - on_node->on_node: owners send directly to local processes whose rows
///    reference them.
/// A process never messages itself; values it already holds are copied.
inline LocalPattern build_local_pattern(const CsrMatrix& a, const Partition& part, const Topology& topo,
                                        const InterProcPattern& ip, Locality locality) {
  detail::require_square_partitioned(a, part, topo);
  CommGraphBuilder builder(topo.num_procs());
  switch (locality) {
    case Locality::on_node_to_off_node:
      for (Rank s = 0; s < topo.num_procs(); ++s) {
        for (const auto& e : ip.graph.sends[static_cast<std::size_t>(s)]) {
          for (Index j : e.indices) builder.add(part.owner(j), s, j);
        }
      }
      break;
    case Locality::off_node_to_on_node: {
      const auto consumers = detail::off_node_consumers(a, part, topo);
      for (Rank q = 0; q < topo.num_procs(); ++q) {
        const auto& list = consumers[static_cast<std::size_t>(topo.node_of(q))];
        for (const auto& e : ip.graph.recvs[static_cast<std::size_t>(q)]) {
          for (Index j : e.indices) {
            auto lo = std::lower_bound(list.begin(), list.end(), std::pair<Index, Rank>{j, -1});
            for (; lo != list.end() && lo->first == j; ++lo) builder.add(q, lo->second, j);
          }
        }
      }
      break;
    }
    case Locality::on_node_to_on_node: {
      detail::SeenFilter seen(a.ncols);
      for (Rank s = 0; s < topo.num_procs(); ++s) {
        const int n = topo.node_of(s);
        for (Index i : part.rows_of(s)) {
          for (Index j : a.row_cols(i)) {
            if (!seen.first(j, s)) continue;
            const Rank owner = part.owner(j);
            if (owner != s && topo.node_of(owner) == n) builder.add(owner, s, j);
          }
        }
      }
      break;
    }
  }
  LocalPattern lp{locality, std::move(builder).build()};
  for (Rank p = 0; p < topo.num_procs(); ++p) {
    for (const auto& e : lp.graph.sends[static_cast<std::size_t>(p)]) {
      if (!topo.same_node(p, e.peer)) throw std::logic_error("intra-node edge between ranks on different nodes");
    }
  }
  return lp;
}

/// Every pattern a node-aware SpMV needs.
struct NodeAwarePattern {
  NodePattern nodes;
  NodeProcessMap map;
  InterProcPattern inter;
  LocalPattern local_initial;
  LocalPattern local_dist;
  LocalPattern fully_local;
};

inline NodeAwarePattern build_node_aware_pattern(const CsrMatrix& a, const Partition& part, const Topology& topo,
                                                 NodePattern nodes, NodeProcessMap map) {
  NodeAwarePattern out;
  out.inter = build_inter_proc_pattern(nodes, map, topo);
  out.local_initial = build_local_pattern(a, part, topo, out.inter, Locality::on_node_to_off_node);
  out.local_dist = build_local_pattern(a, part, topo, out.inter, Locality::off_node_to_on_node);
  out.fully_local = build_local_pattern(a, part, topo, out.inter, Locality::on_node_to_on_node);
  out.nodes = std::move(nodes);
  out.map = std::move(map);
  return out;
}

inline NodeAwarePattern build_node_aware_pattern(const CsrMatrix& a, const Partition& part, const Topology& topo,
                                                 AssignOptions opts = {}) {
  auto nodes = build_node_pattern(a, part, topo);
  auto map = assign_nodes_to_procs(nodes, topo, opts);
  return build_node_aware_pattern(a, part, topo, std::move(nodes), std::move(map));
}

/// Message log of one node-aware SpMV, phase by phase. Throws
/// std::logic_error if an inter-node entry stays on a node or a local entry
/// leaves one.
inline MessageStats nap_message_stats(const InterProcPattern& ip, const LocalPattern& initial,
                                      const LocalPattern& dist, const LocalPattern& fully_local,
                                      const Topology& topo) {
  constexpr MessageClass intra = MessageClass::intra;
  constexpr MessageClass inter = MessageClass::inter;
  MessageStats stats;
  record_graph(stats, Phase::fully_local, fully_local.graph, topo, &intra);
  record_graph(stats, Phase::local_initial, initial.graph, topo, &intra);
  record_graph(stats, Phase::inter_node, ip.graph, topo, &inter);
  record_graph(stats, Phase::local_dist, dist.graph, topo, &intra);
  stats.canonicalize();
  return stats;
}

inline MessageStats nap_message_stats(const NodeAwarePattern& pat, const Topology& topo) {
  return nap_message_stats(pat.inter, pat.local_initial, pat.local_dist, pat.fully_local, topo);
}

}  // namespace napspmv
