#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "napspmv/blocks.hpp"
#include "napspmv/csr.hpp"
#include "napspmv/node_aware_pattern.hpp"
#include "napspmv/partition.hpp"
#include "napspmv/sim_cluster.hpp"
#include "napspmv/standard_pattern.hpp"

namespace napspmv {

struct IndexedValue {
  Index index;
  double value;
};

/// Received values of one rank, ascending by global index.
using ValueBuffer = std::vector<IndexedValue>;

struct SpmvResult {
  std::vector<double> w;
  MessageStats stats;
};

namespace detail {

inline const IndexedValue* find_value(const ValueBuffer& buf, Index j) {
  auto it = std::lower_bound(buf.begin(), buf.end(), j, [](const IndexedValue& a, Index b) { return a.index < b; });
  return it != buf.end() && it->index == j ? &*it : nullptr;
}

// Per-rank copies of the owned entries of a global vector.
inline std::vector<std::vector<double>> scatter(std::span<const double> v, const Partition& part) {
  if (static_cast<Index>(v.size()) != part.size())
    throw std::invalid_argument("vector length " + std::to_string(v.size()) + " does not match partition size " +
                                std::to_string(part.size()));
  std::vector<std::vector<double>> local(static_cast<std::size_t>(part.num_ranks()));
  for (Rank r = 0; r < part.num_ranks(); ++r) {
    for (Index i : part.rows_of(r)) local[static_cast<std::size_t>(r)].push_back(v[static_cast<std::size_t>(i)]);
  }
  return local;
}

inline std::vector<double> gather(const std::vector<std::vector<double>>& local, const Partition& part) {
  std::vector<double> w(static_cast<std::size_t>(part.size()));
  for (Rank r = 0; r < part.num_ranks(); ++r) {
    const auto rows = part.rows_of(r);
    for (std::size_t k = 0; k < rows.size(); ++k)
      w[static_cast<std::size_t>(rows[k])] = local[static_cast<std::size_t>(r)][k];
  }
  return w;
}

// Lays out `buf` in the order of `col_map`; the two index sets must agree exactly.
inline std::vector<double> arrange(const ValueBuffer& buf, const std::vector<Index>& col_map, Rank r) {
  if (buf.size() != col_map.size())
    throw std::logic_error("rank " + std::to_string(r) + " holds " + std::to_string(buf.size()) +
                           " values for a block with " + std::to_string(col_map.size()) + " columns");
  std::vector<double> x(buf.size());
  for (std::size_t k = 0; k < buf.size(); ++k) {
    if (buf[k].index != col_map[k])
      throw std::logic_error("rank " + std::to_string(r) + " missing value for column " + std::to_string(col_map[k]));
    x[k] = buf[k].value;
  }
  return x;
}

inline void sort_unique_or_throw(ValueBuffer& buf, Rank r) {
  std::stable_sort(buf.begin(), buf.end(), [](const IndexedValue& a, const IndexedValue& b) { return a.index < b.index; });
  for (std::size_t k = 1; k < buf.size(); ++k) {
    if (buf[k - 1].index == buf[k].index)
      throw std::logic_error("rank " + std::to_string(r) + " received index " + std::to_string(buf[k].index) + " twice");
  }
}

}  // namespace detail

/// Queues every message of `graph`; `lookup(rank, j)` yields the value rank
/// holds for global index j.
template <class Lookup>
void post_sends(SimCluster& cluster, const CommGraph& graph, Lookup&& lookup) {
  for (Rank src = 0; src < graph.num_ranks(); ++src) {
    for (const auto& e : graph.sends[static_cast<std::size_t>(src)]) {
      std::vector<double> values;
      values.reserve(e.indices.size());
      for (Index j : e.indices) values.push_back(lookup(src, j));
      cluster.send(src, e.peer, e.indices, std::move(values));
    }
  }
}

/// Takes every inbox after a drain and checks it against the receive side
/// of `graph`. Each rank's buffer is sorted by global index.
inline std::vector<ValueBuffer> collect(SimCluster& cluster, const CommGraph& graph) {
  std::vector<ValueBuffer> out(static_cast<std::size_t>(graph.num_ranks()));
  for (Rank r = 0; r < graph.num_ranks(); ++r) {
    auto inbox = cluster.take_inbox(r);
    const auto& expected = graph.recvs[static_cast<std::size_t>(r)];
    if (inbox.size() != expected.size())
      throw std::logic_error("rank " + std::to_string(r) + " received " + std::to_string(inbox.size()) +
                             " messages, pattern expects " + std::to_string(expected.size()));
    auto& buf = out[static_cast<std::size_t>(r)];
    for (std::size_t k = 0; k < inbox.size(); ++k) {
      if (inbox[k].src != expected[k].peer || inbox[k].indices != expected[k].indices)
        throw std::logic_error("rank " + std::to_string(r) + " received an unexpected message from rank " +
                               std::to_string(inbox[k].src));
      for (std::size_t v = 0; v < inbox[k].values.size(); ++v)
        buf.push_back({inbox[k].indices[v], inbox[k].values[v]});
    }
    detail::sort_unique_or_throw(buf, r);
  }
  return out;
}

/// One complete phase: sends, barrier, receives.
template <class Lookup>
std::vector<ValueBuffer> exchange(SimCluster& cluster, Phase phase, const CommGraph& graph, Lookup&& lookup,
                                  Index self_copies = 0) {
  cluster.begin_phase(phase);
  post_sends(cluster, graph, lookup);
  if (self_copies > 0) cluster.record_self_copy(self_copies);
  cluster.drain();
  return collect(cluster, graph);
}

/// Intra-node exchange for one locality tuple.
template <class Lookup>
std::vector<ValueBuffer> run_local_comm(SimCluster& cluster, const LocalPattern& pattern, Lookup&& lookup,
                                        Index self_copies = 0) {
  return exchange(cluster, phase_of(pattern.locality), pattern.graph, lookup, self_copies);
}

struct StandardPlan {
  StandardPattern pattern;
  std::vector<LocalBlocks> blocks;
};

inline StandardPlan make_standard_plan(const CsrMatrix& a, const Partition& part, const Topology& topo) {
  return {build_standard_pattern(a, part, topo), split_all_blocks(a, part, topo, SplitMode::standard)};
}

struct NapPlan {
  NodeAwarePattern pattern;
  std::vector<LocalBlocks> blocks;
};

inline NapPlan make_nap_plan(const CsrMatrix& a, const Partition& part, const Topology& topo,
                             AssignOptions opts = {}) {
  return {build_node_aware_pattern(a, part, topo, opts), split_all_blocks(a, part, topo, SplitMode::node_aware)};
}

/// Reference parallel SpMV: post sends of owned values, multiply the
/// on_process block, wait, multiply the off_process block.
inline SpmvResult run_standard_spmv(const StandardPlan& plan, std::span<const double> v, const Partition& part,
                                    const Topology& topo) {
  const auto v_local = detail::scatter(v, part);
  std::vector<std::vector<double>> w_local(static_cast<std::size_t>(topo.num_procs()));
  auto owned = [&](Rank r, Index j) {
    if (part.owner(j) != r) throw std::logic_error("rank sends a value it does not own");
    return v_local[static_cast<std::size_t>(r)][static_cast<std::size_t>(part.local_index(j))];
  };

  SimCluster cluster(topo);
  cluster.begin_phase(Phase::standard);
  post_sends(cluster, plan.pattern.graph, owned);
  for (Rank r = 0; r < topo.num_procs(); ++r) {
    auto& w = w_local[static_cast<std::size_t>(r)];
    w.assign(static_cast<std::size_t>(part.num_rows(r)), 0.0);
    local_spmv(plan.blocks[static_cast<std::size_t>(r)].on_process, v_local[static_cast<std::size_t>(r)], w);
  }
  cluster.drain();
  const auto received = collect(cluster, plan.pattern.graph);
  for (Rank r = 0; r < topo.num_procs(); ++r) {
    const auto& blk = plan.blocks[static_cast<std::size_t>(r)].off_process;
    const auto x = detail::arrange(received[static_cast<std::size_t>(r)], blk.col_map, r);
    local_spmv(blk.matrix, x, w_local[static_cast<std::size_t>(r)]);
  }
  return {detail::gather(w_local, part), cluster.take_stats()};
}

inline SpmvResult run_standard_spmv(const CsrMatrix& a, std::span<const double> v, const Partition& part,
                                    const Topology& topo) {
  return run_standard_spmv(make_standard_plan(a, part, topo), v, part, topo);
}

/// Node-aware SpMV: fully-local exchange, gather of outgoing values onto the
/// inter-node senders, one inter-node message per assigned node pair
/// (overlapped with the on_process and on_node products), redistribution on
/// the receiving node, then the off_node product.
inline SpmvResult run_napspmv(const NapPlan& plan, std::span<const double> v, const Partition& part,
                              const Topology& topo) {
  const auto& pat = plan.pattern;
  const auto np = static_cast<std::size_t>(topo.num_procs());
  const auto v_local = detail::scatter(v, part);
  auto owned = [&](Rank r, Index j) {
    if (part.owner(j) != r) throw std::logic_error("rank sends a value it does not own");
    return v_local[static_cast<std::size_t>(r)][static_cast<std::size_t>(part.local_index(j))];
  };

  SimCluster cluster(topo);
  const auto b_local = run_local_comm(cluster, pat.fully_local, owned);

  // Values each inter-node sender must hold, and how many it already owns.
  std::vector<std::vector<Index>> outgoing(np);
  Index owned_outgoing = 0;
  for (Rank p = 0; p < topo.num_procs(); ++p) {
    auto& list = outgoing[static_cast<std::size_t>(p)];
    for (const auto& e : pat.inter.graph.sends[static_cast<std::size_t>(p)])
      list.insert(list.end(), e.indices.begin(), e.indices.end());
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    for (Index j : list) owned_outgoing += part.owner(j) == p ? 1 : 0;
  }
  const auto b_forward = run_local_comm(cluster, pat.local_initial, owned, owned_outgoing);
  for (Rank p = 0; p < topo.num_procs(); ++p) {
    const auto& list = outgoing[static_cast<std::size_t>(p)];
    const auto& got = b_forward[static_cast<std::size_t>(p)];
    const auto foreign = static_cast<std::size_t>(
        std::count_if(list.begin(), list.end(), [&](Index j) { return part.owner(j) != p; }));
    if (got.size() != foreign)
      throw std::logic_error("rank " + std::to_string(p) + " gathered " + std::to_string(got.size()) +
                             " values to forward, needs " + std::to_string(foreign));
  }

  cluster.begin_phase(Phase::inter_node);
  post_sends(cluster, pat.inter.graph, [&](Rank p, Index j) {
    if (part.owner(j) == p) return owned(p, j);
    const auto* hit = detail::find_value(b_forward[static_cast<std::size_t>(p)], j);
    if (hit == nullptr) throw std::logic_error("inter-node sender lacks value " + std::to_string(j));
    return hit->value;
  });
  std::vector<std::vector<double>> w_local(np);
  for (Rank r = 0; r < topo.num_procs(); ++r) {
    const auto& blk = plan.blocks[static_cast<std::size_t>(r)];
    auto& w = w_local[static_cast<std::size_t>(r)];
    w.assign(static_cast<std::size_t>(part.num_rows(r)), 0.0);
    local_spmv(blk.on_process, v_local[static_cast<std::size_t>(r)], w);
    const auto x = detail::arrange(b_local[static_cast<std::size_t>(r)], blk.on_node.col_map, r);
    local_spmv(blk.on_node.matrix, x, w);
  }
  cluster.drain();
  const auto g_recv = collect(cluster, pat.inter.graph);

  Index kept = 0;
  std::vector<ValueBuffer> off_node(np);
  for (Rank q = 0; q < topo.num_procs(); ++q) {
    const auto& cols = plan.blocks[static_cast<std::size_t>(q)].off_node.col_map;
    for (const auto& iv : g_recv[static_cast<std::size_t>(q)]) {
      if (std::binary_search(cols.begin(), cols.end(), iv.index)) off_node[static_cast<std::size_t>(q)].push_back(iv);
    }
    kept += static_cast<Index>(off_node[static_cast<std::size_t>(q)].size());
  }
  const auto b_dist = run_local_comm(
      cluster, pat.local_dist,
      [&](Rank q, Index j) {
        const auto* hit = detail::find_value(g_recv[static_cast<std::size_t>(q)], j);
        if (hit == nullptr) throw std::logic_error("redistributing rank lacks value " + std::to_string(j));
        return hit->value;
      },
      kept);

  for (Rank r = 0; r < topo.num_procs(); ++r) {
    auto& buf = off_node[static_cast<std::size_t>(r)];
    const auto& extra = b_dist[static_cast<std::size_t>(r)];
    buf.insert(buf.end(), extra.begin(), extra.end());
    detail::sort_unique_or_throw(buf, r);
    const auto& blk = plan.blocks[static_cast<std::size_t>(r)].off_node;
    const auto x = detail::arrange(buf, blk.col_map, r);
    local_spmv(blk.matrix, x, w_local[static_cast<std::size_t>(r)]);
  }
  return {detail::gather(w_local, part), cluster.take_stats()};
}

inline SpmvResult run_napspmv(const CsrMatrix& a, std::span<const double> v, const Partition& part,
                              const Topology& topo, AssignOptions opts = {}) {
  return run_napspmv(make_nap_plan(a, part, topo, opts), v, part, topo);
}

/// Max |x - y| and that value relative to max |y| (infinity-norms). A zero
/// reference gives relative error 0 for an exact match, infinity otherwise.
struct ErrorNorms {
  double max_abs = 0.0;
  double max_rel = 0.0;
};

inline ErrorNorms compare_vectors(std::span<const double> x, std::span<const double> reference) {
  if (x.size() != reference.size()) throw std::invalid_argument("compare_vectors: length mismatch");
  constexpr double inf = std::numeric_limits<double>::infinity();
  ErrorNorms e;
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - reference[i]);
    e.max_abs = std::isnan(d) ? inf : std::max(e.max_abs, d);
    scale = std::max(scale, std::abs(reference[i]));
  }
  if (scale > 0.0) {
    e.max_rel = e.max_abs / scale;
  } else {
    e.max_rel = e.max_abs == 0.0 ? 0.0 : inf;
  }
  return e;
}

inline constexpr double kRelativeTolerance = 1e-12;

}  // namespace napspmv
