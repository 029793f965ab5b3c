#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "napspmv/message_stats.hpp"
#include "napspmv/topology.hpp"

namespace napspmv {

enum class Protocol { short_msg, eager, rendezvous };
inline constexpr std::array kAllProtocols{Protocol::short_msg, Protocol::eager, Protocol::rendezvous};

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::short_msg: return "short";
    case Protocol::eager: return "eager";
    case Protocol::rendezvous: return "rendezvous";
  }
  return "?";
}

/// Latency (s) and rates (bytes/s) for one protocol. `b_n` may be infinite.
struct ProtocolParams {
  double alpha = 0.0;
  double b_inj = 0.0;
  double b_max = 0.0;
  double b_n = std::numeric_limits<double>::infinity();
  double alpha_l = 0.0;
  double b_max_l = 0.0;

  friend bool operator==(const ProtocolParams&, const ProtocolParams&) = default;
};

struct CostParams {
  std::array<ProtocolParams, 3> protocols{};
  Index short_max_bytes = 128;
  Index eager_max_bytes = 8192;

  [[nodiscard]] const ProtocolParams& operator[](Protocol p) const { return protocols[static_cast<std::size_t>(p)]; }
  ProtocolParams& operator[](Protocol p) { return protocols[static_cast<std::size_t>(p)]; }

  /// Measured Blue Waters (Cray XE) values; thresholds are typical MPI cutoffs.
  static CostParams blue_waters() {
    CostParams c;
    const double inf = std::numeric_limits<double>::infinity();
    c[Protocol::short_msg] = {4.0e-6, 6.3e8, -1.8e7, inf, 1.3e-6, 4.2e8};
    c[Protocol::eager] = {1.1e-5, 1.7e9, 6.2e7, inf, 1.6e-6, 7.4e8};
    c[Protocol::rendezvous] = {2.0e-5, 3.6e9, 6.1e8, 5.5e9, 4.2e-6, 3.1e9};
    return c;
  }

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

inline void validate(const CostParams& c) {
  if (c.short_max_bytes < 0 || c.eager_max_bytes <= c.short_max_bytes)
    throw std::invalid_argument("protocol thresholds must satisfy 0 <= short_max < eager_max");
  for (Protocol p : kAllProtocols) {
    const auto& q = c[p];
    if (!(q.alpha_l > 0.0) || !(q.b_max_l > 0.0))
      throw std::invalid_argument(std::string("intra-node parameters for ") + to_string(p) + " must be positive");
    if (!(q.alpha >= 0.0)) throw std::invalid_argument(std::string("alpha for ") + to_string(p) + " must be >= 0");
  }
}

/// Raised when a model formula has no meaningful value, e.g. a non-positive
/// effective bandwidth.
class ModelDomainError : public std::domain_error {
 public:
  explicit ModelDomainError(const std::string& what, std::optional<MessageRecord> record = std::nullopt)
      : std::domain_error(what), record_(record) {}
  [[nodiscard]] const std::optional<MessageRecord>& record() const noexcept { return record_; }

 private:
  std::optional<MessageRecord> record_;
};

inline Protocol select_protocol(Index bytes, const CostParams& c) {
  if (bytes <= c.short_max_bytes) return Protocol::short_msg;
  if (bytes <= c.eager_max_bytes) return Protocol::eager;
  return Protocol::rendezvous;
}

/// alpha + s / B_max
inline double model_postal(Index bytes, const CostParams& c, Protocol p) {
  const auto& q = c[p];
  if (!(q.b_max > 0.0))
    throw ModelDomainError(std::string("postal model undefined: B_max for ") + to_string(p) + " is " +
                           std::to_string(q.b_max));
  return q.alpha + static_cast<double>(bytes) / q.b_max;
}

/// alpha + ppn * s / min(B_N, B_max + (ppn - 1) * B_inj)
inline double model_max_rate(Index bytes, int ppn, const CostParams& c, Protocol p) {
  if (ppn < 1) throw std::invalid_argument("max-rate model needs ppn >= 1");
  const auto& q = c[p];
  const double rate = std::min(q.b_n, q.b_max + static_cast<double>(ppn - 1) * q.b_inj);
  if (!(rate > 0.0))
    throw ModelDomainError(std::string("max-rate model undefined for ") + to_string(p) + " at ppn " +
                           std::to_string(ppn) + ": effective bandwidth " + std::to_string(rate));
  return q.alpha + static_cast<double>(ppn) * static_cast<double>(bytes) / rate;
}

/// alpha_l + s / B_max_l
inline double model_intra(Index bytes, const CostParams& c, Protocol p) {
  const auto& q = c[p];
  return q.alpha_l + static_cast<double>(bytes) / q.b_max_l;
}

/// Cost of one recorded message: intra-node model or max-rate with the
/// topology's ppn, protocol chosen by size.
inline double model_message(const MessageRecord& r, const Topology& topo, const CostParams& c) {
  const Protocol p = select_protocol(r.byte_count, c);
  try {
    return r.cls == MessageClass::intra ? model_intra(r.byte_count, c, p)
                                        : model_max_rate(r.byte_count, topo.ppn(), c, p);
  } catch (const ModelDomainError& e) {
    throw ModelDomainError(std::string(e.what()) + " [" + describe(r) + "]", r);
  }
}

struct PhaseCost {
  double seconds = 0.0;        // max over ranks of summed send charges
  double intra_seconds = 0.0;  // same, intra-node messages only
  double inter_seconds = 0.0;  // same, inter-node messages only
};

struct ModeledCost {
  std::array<PhaseCost, kNumPhases> phases{};
  double total = 0.0;

  [[nodiscard]] const PhaseCost& phase(Phase p) const { return phases[static_cast<std::size_t>(p)]; }
};

/// Bulk-synchronous critical path: each phase costs the largest per-rank
/// sum of message charges; phases add up.
inline ModeledCost model_stats(const MessageStats& stats, const Topology& topo, const CostParams& c) {
  const auto np = static_cast<std::size_t>(topo.num_procs());
  // [phase][rank][class]
  std::vector<std::array<double, 2>> sums(kNumPhases * np, {0.0, 0.0});
  for (const auto& r : stats.records) {
    sums[static_cast<std::size_t>(r.phase) * np + static_cast<std::size_t>(r.src)][static_cast<std::size_t>(r.cls)] +=
        model_message(r, topo, c);
  }
  ModeledCost out;
  for (std::size_t ph = 0; ph < kNumPhases; ++ph) {
    auto& pc = out.phases[ph];
    for (std::size_t rank = 0; rank < np; ++rank) {
      const auto& s = sums[ph * np + rank];
      pc.seconds = std::max(pc.seconds, s[0] + s[1]);
      pc.intra_seconds = std::max(pc.intra_seconds, s[0]);
      pc.inter_seconds = std::max(pc.inter_seconds, s[1]);
    }
    out.total += pc.seconds;
  }
  return out;
}

// JSON parameter files: {"short": {...}, "eager": {...}, "rendezvous": {...},
// "thresholds": {"short_max": .., "eager_max": ..}}; "inf" spells infinity.

namespace detail {

inline double rate_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("expected a number or \"inf\", got \"" + j.get<std::string>() + "\"");
  }
  return j.get<double>();
}

inline nlohmann::json rate_to_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

}  // namespace detail

inline CostParams cost_params_from_json(const nlohmann::json& j) {
  CostParams c;
  for (Protocol p : kAllProtocols) {
    const auto& q = j.at(to_string(p));
    auto& out = c[p];
    out.alpha = q.at("alpha").get<double>();
    out.b_inj = detail::rate_from_json(q.at("b_inj"));
    out.b_max = detail::rate_from_json(q.at("b_max"));
    out.b_n = detail::rate_from_json(q.at("b_n"));
    out.alpha_l = q.at("alpha_l").get<double>();
    out.b_max_l = detail::rate_from_json(q.at("b_max_l"));
  }
  const auto& t = j.at("thresholds");
  c.short_max_bytes = t.at("short_max").get<Index>();
  c.eager_max_bytes = t.at("eager_max").get<Index>();
  validate(c);
  return c;
}

inline nlohmann::ordered_json cost_params_to_json(const CostParams& c) {
  nlohmann::ordered_json j;
  for (Protocol p : kAllProtocols) {
    const auto& q = c[p];
    j[to_string(p)] = {{"alpha", q.alpha},
                       {"b_inj", detail::rate_to_json(q.b_inj)},
                       {"b_max", detail::rate_to_json(q.b_max)},
                       {"b_n", detail::rate_to_json(q.b_n)},
                       {"alpha_l", q.alpha_l},
                       {"b_max_l", detail::rate_to_json(q.b_max_l)}};
  }
  j["thresholds"] = {{"short_max", c.short_max_bytes}, {"eager_max", c.eager_max_bytes}};
  return j;
}

inline CostParams load_cost_params(std::istream& in) {
  try {
    return cost_params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad model parameter file: ") + e.what());
  }
}

}  // namespace napspmv
