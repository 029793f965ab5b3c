#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "napspmv/message_stats.hpp"
#include "napspmv/topology.hpp"

namespace napspmv {

/// A delivered message. Indices travel with the payload so receivers can
/// audit what they got; only the values are charged as bytes.
struct Envelope {
  Rank src = 0;
  std::vector<Index> indices;
  std::vector<double> values;
};

/// In-process stand-in for a message-passing runtime. Communication happens
/// in phases: sends are queued (isend), `drain()` is the barrier that
/// delivers them (waitall), and each rank then takes its inbox, ordered by
/// source. A message never outlives its phase.
class SimCluster {
 public:
  explicit SimCluster(Topology topo)
      : topo_(topo),
        outbox_(static_cast<std::size_t>(topo.num_procs())),
        inbox_(static_cast<std::size_t>(topo.num_procs())) {}

  [[nodiscard]] const Topology& topology() const noexcept { return topo_; }
  [[nodiscard]] const MessageStats& stats() const noexcept { return stats_; }
  [[nodiscard]] MessageStats take_stats() {
    stats_.canonicalize();
    return std::move(stats_);
  }

  void begin_phase(Phase phase) {
    if (phase_) throw std::logic_error("phase " + std::string(to_string(*phase_)) + " still open");
    for (const auto& box : inbox_) {
      if (!box.empty()) throw std::logic_error("undelivered messages left from a previous phase");
    }
    phase_ = phase;
  }

  void send(Rank src, Rank dst, std::vector<Index> indices, std::vector<double> values) {
    if (!phase_) throw std::logic_error("send outside a communication phase");
    if (indices.size() != values.size()) throw std::logic_error("index/value count mismatch in message");
    if (indices.empty()) throw std::logic_error("empty message");
    stats_.add(*phase_, src, dst, static_cast<Index>(values.size()), topo_);
    outbox_[static_cast<std::size_t>(dst)].push_back({src, std::move(indices), std::move(values)});
  }

  void record_self_copy(Index values) {
    if (!phase_) throw std::logic_error("copy outside a communication phase");
    stats_.add_self_copy(*phase_, values);
  }

  /// Completes the phase: every queued message lands in its destination inbox.
  void drain() {
    if (!phase_) throw std::logic_error("drain without an open phase");
    for (std::size_t r = 0; r < outbox_.size(); ++r) {
      auto& box = outbox_[r];
      std::stable_sort(box.begin(), box.end(), [](const Envelope& a, const Envelope& b) { return a.src < b.src; });
      inbox_[r] = std::move(box);
      box.clear();
    }
    phase_.reset();
  }

  std::vector<Envelope> take_inbox(Rank r) {
    if (phase_) throw std::logic_error("inbox read before the phase drained");
    return std::exchange(inbox_[static_cast<std::size_t>(r)], {});
  }

 private:
  Topology topo_;
  std::optional<Phase> phase_;
  std::vector<std::vector<Envelope>> outbox_;
  std::vector<std::vector<Envelope>> inbox_;
  MessageStats stats_;
};

}  // namespace napspmv
