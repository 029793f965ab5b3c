#pragma once

#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "napspmv/topology.hpp"

namespace napspmv {

enum class PartitionKind { contiguous, strided, explicit_map };

inline const char* to_string(PartitionKind k) {
  switch (k) {
    case PartitionKind::contiguous: return "contiguous";
    case PartitionKind::strided: return "strided";
    case PartitionKind::explicit_map: return "explicit";
  }
  return "?";
}

/// Row ownership map. Each rank's rows are kept in ascending global order;
/// a row's position in that list is its local index on the owner.
class Partition {
 public:
  Partition(std::vector<Rank> owner, int num_ranks, PartitionKind kind)
      : owner_(std::move(owner)), kind_(kind), num_ranks_(num_ranks) {
    if (num_ranks < 1) throw std::invalid_argument("partition needs at least one rank");
    offsets_.assign(static_cast<std::size_t>(num_ranks) + 1, 0);
    for (std::size_t i = 0; i < owner_.size(); ++i) {
      const Rank r = owner_[i];
      if (r < 0 || r >= num_ranks)
        throw std::out_of_range("row " + std::to_string(i) + " assigned to rank " + std::to_string(r) +
                                " outside [0, " + std::to_string(num_ranks) + ")");
      ++offsets_[static_cast<std::size_t>(r) + 1];
    }
    for (std::size_t r = 1; r < offsets_.size(); ++r) offsets_[r] += offsets_[r - 1];
    rows_.resize(owner_.size());
    local_.resize(owner_.size());
    std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < owner_.size(); ++i) {
      auto& slot = fill[static_cast<std::size_t>(owner_[i])];
      local_[i] = slot - offsets_[static_cast<std::size_t>(owner_[i])];
      rows_[static_cast<std::size_t>(slot++)] = static_cast<Index>(i);
    }
  }

  [[nodiscard]] Index size() const noexcept { return static_cast<Index>(owner_.size()); }
  [[nodiscard]] int num_ranks() const noexcept { return num_ranks_; }
  [[nodiscard]] PartitionKind kind() const noexcept { return kind_; }
  [[nodiscard]] Rank owner(Index row) const { return owner_[static_cast<std::size_t>(row)]; }
  [[nodiscard]] const std::vector<Rank>& assignment() const noexcept { return owner_; }

  /// Position of `row` within its owner's row list.
  [[nodiscard]] Index local_index(Index row) const { return local_[static_cast<std::size_t>(row)]; }

  /// Rows owned by `r`, ascending.
  [[nodiscard]] std::span<const Index> rows_of(Rank r) const {
    const auto b = offsets_[static_cast<std::size_t>(r)];
    const auto e = offsets_[static_cast<std::size_t>(r) + 1];
    return std::span<const Index>(rows_).subspan(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b));
  }
  [[nodiscard]] Index num_rows(Rank r) const {
    return offsets_[static_cast<std::size_t>(r) + 1] - offsets_[static_cast<std::size_t>(r)];
  }

 private:
  std::vector<Rank> owner_;
  PartitionKind kind_;
  int num_ranks_;
  std::vector<Index> offsets_;
  std::vector<Index> rows_;
  std::vector<Index> local_;
};

namespace detail {
inline void require_rows_per_rank(Index n, const Topology& topo) {
  if (n < topo.num_procs())
    throw std::invalid_argument(std::to_string(n) + " rows cannot cover " + std::to_string(topo.num_procs()) +
                                " ranks without leaving some empty");
}
}  // namespace detail

/// Balanced contiguous blocks; the first n mod n_p ranks take one extra row.
inline Partition partition_contiguous(Index n, const Topology& topo) {
  detail::require_rows_per_rank(n, topo);
  const Index np = topo.num_procs();
  const Index base = n / np;
  const Index extra = n % np;
  std::vector<Rank> owner(static_cast<std::size_t>(n));
  Index row = 0;
  for (Rank r = 0; r < np; ++r) {
    const Index count = base + (r < extra ? 1 : 0);
    for (Index k = 0; k < count; ++k) owner[static_cast<std::size_t>(row++)] = r;
  }
  return Partition(std::move(owner), topo.num_procs(), PartitionKind::contiguous);
}

/// Row i owned by rank i mod n_p.
inline Partition partition_strided(Index n, const Topology& topo) {
  detail::require_rows_per_rank(n, topo);
  std::vector<Rank> owner(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) owner[static_cast<std::size_t>(i)] = static_cast<Rank>(i % topo.num_procs());
  return Partition(std::move(owner), topo.num_procs(), PartitionKind::strided);
}

inline Partition partition_explicit(std::vector<Rank> owner, const Topology& topo) {
  return Partition(std::move(owner), topo.num_procs(), PartitionKind::explicit_map);
}

/// Reads one base-10 rank per line for each of the `n` rows.
inline Partition partition_from_file(std::istream& in, Index n, const Topology& topo) {
  std::vector<Rank> owner;
  owner.reserve(static_cast<std::size_t>(n));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw std::invalid_argument("partition file line " + std::to_string(lineno) + ": empty line");
    std::size_t used = 0;
    long r = 0;
    try {
      r = std::stol(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size())
      throw std::invalid_argument("partition file line " + std::to_string(lineno) + ": not an integer: '" + line + "'");
    if (r < 0 || r >= topo.num_procs())
      throw std::out_of_range("partition file line " + std::to_string(lineno) + ": rank " + std::to_string(r) +
                              " outside [0, " + std::to_string(topo.num_procs()) + ")");
    owner.push_back(static_cast<Rank>(r));
  }
  if (static_cast<Index>(owner.size()) != n)
    throw std::invalid_argument("partition file has " + std::to_string(owner.size()) + " lines, expected " +
                                std::to_string(n));
  return partition_explicit(std::move(owner), topo);
}

}  // namespace napspmv
