#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "napspmv/topology.hpp"

namespace napspmv {

/// One message worth of global vector indices exchanged with `peer`.
struct Exchange {
  Rank peer = 0;
  std::vector<Index> indices;

  friend bool operator==(const Exchange&, const Exchange&) = default;
};

/// Point-to-point schedule: per rank, outgoing messages sorted by
/// destination and incoming messages sorted by source. Index lists are
/// ascending, deduplicated and never empty; no rank messages itself.
struct CommGraph {
  std::vector<std::vector<Exchange>> sends;
  std::vector<std::vector<Exchange>> recvs;

  [[nodiscard]] int num_ranks() const noexcept { return static_cast<int>(sends.size()); }

  /// Indices `src` sends to `dst`, empty if they do not communicate.
  [[nodiscard]] std::span<const Index> indices(Rank src, Rank dst) const {
    const auto& out = sends[static_cast<std::size_t>(src)];
    auto it = std::lower_bound(out.begin(), out.end(), dst, [](const Exchange& e, Rank r) { return e.peer < r; });
    if (it == out.end() || it->peer != dst) return {};
    return it->indices;
  }

  [[nodiscard]] std::vector<Rank> destinations(Rank src) const {
    std::vector<Rank> out;
    for (const auto& e : sends[static_cast<std::size_t>(src)]) out.push_back(e.peer);
    return out;
  }

  [[nodiscard]] Index message_count() const {
    Index n = 0;
    for (const auto& s : sends) n += static_cast<Index>(s.size());
    return n;
  }

  [[nodiscard]] Index value_count() const {
    Index n = 0;
    for (const auto& s : sends)
      for (const auto& e : s) n += static_cast<Index>(e.indices.size());
    return n;
  }

  friend bool operator==(const CommGraph&, const CommGraph&) = default;
};

/// Collects per-(source, destination) index buckets into a canonical graph:
/// buckets are sorted and deduplicated, empty buckets and self-pairs dropped,
/// and the receive side filled as the transpose.
class CommGraphBuilder {
 public:
  explicit CommGraphBuilder(int num_ranks) : pending_(static_cast<std::size_t>(num_ranks)) {}

  void add(Rank src, Rank dst, Index index) {
    if (src == dst) return;
    pending_[static_cast<std::size_t>(src)].push_back({dst, index});
  }

  CommGraph build() && {
    CommGraph g;
    const auto n = pending_.size();
    g.sends.resize(n);
    g.recvs.resize(n);
    for (std::size_t src = 0; src < n; ++src) {
      auto& items = pending_[src];
      std::sort(items.begin(), items.end());
      items.erase(std::unique(items.begin(), items.end()), items.end());
      for (const auto& [dst, idx] : items) {
        auto& out = g.sends[src];
        if (out.empty() || out.back().peer != dst) out.push_back({dst, {}});
        out.back().indices.push_back(idx);
      }
      items.clear();
      items.shrink_to_fit();
    }
    for (std::size_t src = 0; src < n; ++src) {
      for (const auto& e : g.sends[src]) {
        g.recvs[static_cast<std::size_t>(e.peer)].push_back({static_cast<Rank>(src), e.indices});
      }
    }
    return g;
  }

 private:
  std::vector<std::vector<std::pair<Rank, Index>>> pending_;
};

namespace detail {

/// Remembers the last key under which each index was seen, so a loop that
/// visits keys in non-interleaved runs can skip repeats in O(1).
class SeenFilter {
 public:
  explicit SeenFilter(Index size) : stamp_(static_cast<std::size_t>(size), -1) {}

  bool first(Index j, int key) {
    auto& s = stamp_[static_cast<std::size_t>(j)];
    if (s == key) return false;
    s = key;
    return true;
  }

 private:
  std::vector<int> stamp_;
};

}  // namespace detail

/// Receive-side view computed from the send side.
inline std::vector<std::vector<Exchange>> transpose(const std::vector<std::vector<Exchange>>& sends) {
  std::vector<std::vector<Exchange>> recvs(sends.size());
  for (std::size_t src = 0; src < sends.size(); ++src) {
    for (const auto& e : sends[src]) {
      if (e.peer < 0 || static_cast<std::size_t>(e.peer) >= sends.size())
        throw std::out_of_range("message destination outside rank range");
      recvs[static_cast<std::size_t>(e.peer)].push_back({static_cast<Rank>(src), e.indices});
    }
  }
  return recvs;
}

}  // namespace napspmv
