#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "napspmv/comm_graph.hpp"
#include "napspmv/topology.hpp"

namespace napspmv {

inline constexpr Index kBytesPerValue = 8;

/// Communication phases. `standard` is the single exchange of the reference
/// algorithm; the other four are the node-aware steps in execution order.
enum class Phase { standard, fully_local, local_initial, inter_node, local_dist };
inline constexpr std::array kAllPhases{Phase::standard, Phase::fully_local, Phase::local_initial, Phase::inter_node,
                                       Phase::local_dist};
inline constexpr std::size_t kNumPhases = kAllPhases.size();

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::standard: return "standard";
    case Phase::fully_local: return "fully_local";
    case Phase::local_initial: return "local_initial";
    case Phase::inter_node: return "inter_node";
    case Phase::local_dist: return "local_dist";
  }
  return "?";
}

enum class MessageClass { intra, inter };

inline const char* to_string(MessageClass c) { return c == MessageClass::intra ? "intra" : "inter"; }

struct MessageRecord {
  Phase phase = Phase::standard;
  Rank src = 0;
  Rank dst = 0;
  Index value_count = 0;
  Index byte_count = 0;
  MessageClass cls = MessageClass::intra;

  friend bool operator==(const MessageRecord&, const MessageRecord&) = default;
};

inline std::string describe(const MessageRecord& r) {
  return std::string(to_string(r.phase)) + " " + std::to_string(r.src) + "->" + std::to_string(r.dst) + " (" +
         std::to_string(r.byte_count) + " bytes, " + to_string(r.cls) + ")";
}

/// Audited message log. Self-deliveries are not messages; their value
/// counts are tracked per phase in `self_copy_values`.
struct MessageStats {
  std::vector<MessageRecord> records;
  std::array<Index, kNumPhases> self_copy_values{};

  void add(Phase phase, Rank src, Rank dst, Index values, const Topology& topo) {
    if (src == dst) throw std::logic_error("a rank never messages itself");
    const auto cls = topo.same_node(src, dst) ? MessageClass::intra : MessageClass::inter;
    records.push_back({phase, src, dst, values, values * kBytesPerValue, cls});
  }

  void add_self_copy(Phase phase, Index values) { self_copy_values[static_cast<std::size_t>(phase)] += values; }

  /// Orders records by (phase, src, dst).
  void canonicalize() {
    std::stable_sort(records.begin(), records.end(), [](const MessageRecord& a, const MessageRecord& b) {
      return std::tie(a.phase, a.src, a.dst) < std::tie(b.phase, b.src, b.dst);
    });
  }

  friend bool operator==(const MessageStats&, const MessageStats&) = default;
};

struct Tally {
  Index messages = 0;
  Index bytes = 0;

  friend bool operator==(const Tally&, const Tally&) = default;
};

/// Aggregates of a MessageStats log: totals per phase and class, plus the
/// per-rank maxima of messages and bytes sent in each class.
struct StatsSummary {
  std::array<std::array<Tally, 2>, kNumPhases> by_phase{};  // [phase][class]
  std::array<Tally, 2> total{};                              // [class]
  std::array<Tally, 2> max_per_rank{};                       // [class], maxima taken independently

  [[nodiscard]] const Tally& phase(Phase p, MessageClass c) const {
    return by_phase[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
  }
  [[nodiscard]] const Tally& totals(MessageClass c) const { return total[static_cast<std::size_t>(c)]; }
  [[nodiscard]] const Tally& rank_max(MessageClass c) const { return max_per_rank[static_cast<std::size_t>(c)]; }
};

inline StatsSummary summarize(const MessageStats& stats, const Topology& topo) {
  StatsSummary s;
  std::vector<std::array<Tally, 2>> per_rank(static_cast<std::size_t>(topo.num_procs()));
  for (const auto& r : stats.records) {
    const auto c = static_cast<std::size_t>(r.cls);
    auto& ph = s.by_phase[static_cast<std::size_t>(r.phase)][c];
    ++ph.messages;
    ph.bytes += r.byte_count;
    ++s.total[c].messages;
    s.total[c].bytes += r.byte_count;
    auto& pr = per_rank[static_cast<std::size_t>(r.src)][c];
    ++pr.messages;
    pr.bytes += r.byte_count;
  }
  for (const auto& pr : per_rank) {
    for (std::size_t c = 0; c < 2; ++c) {
      s.max_per_rank[c].messages = std::max(s.max_per_rank[c].messages, pr[c].messages);
      s.max_per_rank[c].bytes = std::max(s.max_per_rank[c].bytes, pr[c].bytes);
    }
  }
  return s;
}

/// Appends one record per message of `g`, checking that every message has
/// the class `expected` when one is given.
inline void record_graph(MessageStats& stats, Phase phase, const CommGraph& g, const Topology& topo,
                         const MessageClass* expected = nullptr) {
  for (Rank src = 0; src < g.num_ranks(); ++src) {
    for (const auto& e : g.sends[static_cast<std::size_t>(src)]) {
      stats.add(phase, src, e.peer, static_cast<Index>(e.indices.size()), topo);
      if (expected != nullptr && stats.records.back().cls != *expected)
        throw std::logic_error("misclassified message " + describe(stats.records.back()));
    }
  }
}

}  // namespace napspmv
