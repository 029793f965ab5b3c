#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "napspmv/cost_model.hpp"
#include "napspmv/executor.hpp"
#include "napspmv/fixtures.hpp"
#include "napspmv/generate.hpp"
#include "napspmv/matrix_market.hpp"

namespace napspmv::bench {

using ordered_json = nlohmann::ordered_json;

/// Bad flags, unreadable files or malformed inputs (exit status 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kMaxNodes = 64;
inline constexpr int kMaxPpn = 16;
inline constexpr Index kMaxRows = 1'000'000;

struct MatrixSource {
  enum class Kind { mtx, random, fixture } kind = Kind::fixture;
  std::string path;     // mtx
  Index rows = 0;       // random
  Index nnz_per_row = 0;
  std::string fixture = "example1";
  std::uint64_t seed = 1;
};

/// Parses "<rows>x<nnz_per_row>".
inline std::pair<Index, Index> parse_random_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, x), b = text.substr(x + 1);
    const Index rows = std::stoll(a, &used_a);
    const Index nnz = std::stoll(b, &used_b);
    if (used_a != a.size() || used_b != b.size() || rows < 1 || nnz < 0) throw std::invalid_argument("");
    return {rows, nnz};
  } catch (const std::exception&) {
    throw UsageError("--random expects <rows>x<nnz_per_row>, got '" + text + "'");
  }
}

inline std::string describe(const MatrixSource& src) {
  switch (src.kind) {
    case MatrixSource::Kind::mtx: return "mtx:" + src.path;
    case MatrixSource::Kind::random:
      return "random:" + std::to_string(src.rows) + "x" + std::to_string(src.nnz_per_row) + ":seed" +
             std::to_string(src.seed);
    case MatrixSource::Kind::fixture: return "fixture:" + src.fixture;
  }
  return "?";
}

inline CsrMatrix load_matrix(const MatrixSource& src) {
  switch (src.kind) {
    case MatrixSource::Kind::mtx: {
      std::ifstream in(src.path);
      if (!in) throw UsageError("cannot open matrix file '" + src.path + "': file not found or unreadable");
      try {
        return parse_matrix_market(in);
      } catch (const ParseError& e) {
        throw UsageError(src.path + ": " + e.what());
      } catch (const std::out_of_range& e) {
        throw UsageError(src.path + ": " + e.what());
      }
    }
    case MatrixSource::Kind::random:
      if (src.nnz_per_row > src.rows) throw UsageError("--random: nnz_per_row exceeds row count");
      return generate_random(src.rows, src.nnz_per_row, src.seed);
    case MatrixSource::Kind::fixture:
      if (!fixtures::is_known(src.fixture)) throw UsageError("unknown fixture '" + src.fixture + "'");
      return fixtures::example1_matrix();
  }
  throw UsageError("no matrix source");
}

/// "contiguous", "strided" or "file:<path>".
struct PartitionChoice {
  PartitionKind kind = PartitionKind::contiguous;
  std::string path;
};

inline PartitionChoice parse_partition_choice(const std::string& s) {
  if (s == "contiguous") return {PartitionKind::contiguous, {}};
  if (s == "strided") return {PartitionKind::strided, {}};
  if (s.rfind("file:", 0) == 0 && s.size() > 5) return {PartitionKind::explicit_map, s.substr(5)};
  throw UsageError("--partition expects contiguous|strided|file:<path>, got '" + s + "'");
}

inline Partition make_partition(const PartitionChoice& choice, Index n, const Topology& topo) {
  try {
    switch (choice.kind) {
      case PartitionKind::contiguous: return partition_contiguous(n, topo);
      case PartitionKind::strided: return partition_strided(n, topo);
      case PartitionKind::explicit_map: {
        std::ifstream in(choice.path);
        if (!in) throw UsageError("cannot open partition file '" + choice.path + "'");
        return partition_from_file(in, n, topo);
      }
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("partition: ") + e.what());
  }
  throw UsageError("unknown partition kind");
}

inline void check_desk_scale(const Topology& topo, Index n) {
  if (topo.num_nodes() > kMaxNodes || topo.ppn() > kMaxPpn)
    throw UsageError("topology " + std::to_string(topo.num_nodes()) + "x" + std::to_string(topo.ppn()) +
                     " exceeds the simulated limits of " + std::to_string(kMaxNodes) + " nodes x " +
                     std::to_string(kMaxPpn) + " ppn");
  if (n > kMaxRows) throw UsageError("matrix with " + std::to_string(n) + " rows exceeds the simulated limit");
}

inline CostParams load_params_file(const std::string& path) {
  if (path.empty()) return CostParams::blue_waters();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open model parameter file '" + path + "'");
  try {
    return load_cost_params(in);
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

/// Input vector used by `verify` and `sweep`.
inline std::vector<double> input_vector(Index n, std::uint64_t seed) {
  return generate_vector(n, seed ^ 0x9e3779b97f4a7c15ULL);
}

struct AlgorithmReport {
  bool verified = false;
  ErrorNorms error;
  MessageStats stats;
  StatsSummary summary;
  std::optional<ModeledCost> cost;
  std::string model_error;
  std::string failure;
};

struct RunReport {
  std::string source;
  Index n = 0;
  Index nnz = 0;
  Topology topo{1, 1};
  PartitionKind partition = PartitionKind::contiguous;
  AlgorithmReport standard;
  AlgorithmReport nap;

  [[nodiscard]] bool verified() const { return standard.verified && nap.verified; }
};

namespace detail {

template <class Run>
AlgorithmReport run_algorithm(Run&& run, const std::vector<double>& oracle, const Topology& topo,
                              const CostParams& params) {
  AlgorithmReport rep;
  try {
    SpmvResult res = run();
    rep.error = compare_vectors(res.w, oracle);
    rep.verified = rep.error.max_rel <= kRelativeTolerance;
    rep.stats = std::move(res.stats);
    rep.summary = summarize(rep.stats, topo);
  } catch (const std::exception& e) {
    rep.failure = e.what();
    return rep;
  }
  try {
    rep.cost = model_stats(rep.stats, topo, params);
  } catch (const ModelDomainError& e) {
    rep.model_error = e.what();
  }
  return rep;
}

}  // namespace detail

/// Runs the serial oracle and both simulated algorithms on one problem.
inline RunReport run_verify(const CsrMatrix& a, std::string source, const Partition& part, const Topology& topo,
                            const CostParams& params, std::uint64_t seed, AssignOptions opts = {}) {
  RunReport rep;
  rep.source = std::move(source);
  rep.n = a.nrows;
  rep.nnz = a.nnz();
  rep.topo = topo;
  rep.partition = part.kind();
  const auto v = input_vector(a.nrows, seed);
  const auto oracle = run_serial_spmv(a, v);
  rep.standard = detail::run_algorithm([&] { return run_standard_spmv(a, v, part, topo); }, oracle, topo, params);
  rep.nap = detail::run_algorithm([&] { return run_napspmv(a, v, part, topo, opts); }, oracle, topo, params);
  return rep;
}

/// standard / nap, or "inf" when the node-aware value is zero.
inline ordered_json ratio_json(double standard, double nap) {
  if (nap > 0.0) return standard / nap;
  return "inf";
}

inline ordered_json to_json(const Tally& t) { return {{"messages", t.messages}, {"bytes", t.bytes}}; }

inline ordered_json to_json(const StatsSummary& s, bool node_aware) {
  ordered_json phases = ordered_json::object();
  for (Phase p : kAllPhases) {
    if ((p == Phase::standard) == node_aware) continue;
    phases[to_string(p)] = {{"intra", to_json(s.phase(p, MessageClass::intra))},
                            {"inter", to_json(s.phase(p, MessageClass::inter))}};
  }
  return {{"phases", phases},
          {"total", {{"intra", to_json(s.totals(MessageClass::intra))}, {"inter", to_json(s.totals(MessageClass::inter))}}},
          {"per_rank_max",
           {{"intra", {{"max_msgs_sent", s.rank_max(MessageClass::intra).messages},
                       {"max_bytes_sent", s.rank_max(MessageClass::intra).bytes}}},
            {"inter", {{"max_msgs_sent", s.rank_max(MessageClass::inter).messages},
                       {"max_bytes_sent", s.rank_max(MessageClass::inter).bytes}}}}}};
}

inline ordered_json to_json(const ModeledCost& c, bool node_aware) {
  ordered_json phases = ordered_json::object();
  for (Phase p : kAllPhases) {
    if ((p == Phase::standard) == node_aware) continue;
    const auto& pc = c.phase(p);
    phases[to_string(p)] = {{"seconds", pc.seconds}, {"intra_seconds", pc.intra_seconds}, {"inter_seconds", pc.inter_seconds}};
  }
  return {{"phases", phases}, {"total_seconds", c.total}};
}

inline ordered_json to_json(const AlgorithmReport& r, bool node_aware) {
  ordered_json j;
  j["verified"] = r.verified;
  if (!r.failure.empty()) {
    j["failure"] = r.failure;
    return j;
  }
  j["max_abs_error"] = r.error.max_abs;
  j["max_rel_error"] = r.error.max_rel;
  j["messages"] = to_json(r.summary, node_aware);
  if (r.cost) {
    j["modeled_cost"] = to_json(*r.cost, node_aware);
  } else {
    j["modeled_cost"] = nullptr;
    j["model_error"] = r.model_error;
  }
  return j;
}

inline ordered_json to_json(const RunReport& r) {
  ordered_json j;
  j["matrix"] = {{"source", r.source}, {"n", r.n}, {"nnz", r.nnz}};
  j["topology"] = {{"nodes", r.topo.num_nodes()}, {"ppn", r.topo.ppn()}, {"n_procs", r.topo.num_procs()}};
  j["partition"] = to_string(r.partition);
  j["tolerance"] = kRelativeTolerance;
  j["standard"] = to_json(r.standard, false);
  j["nap"] = to_json(r.nap, true);
  ordered_json cmp;
  const auto& s = r.standard.summary;
  const auto& n = r.nap.summary;
  cmp["inter_msg_reduction"] = ratio_json(static_cast<double>(s.totals(MessageClass::inter).messages),
                                          static_cast<double>(n.totals(MessageClass::inter).messages));
  cmp["inter_byte_reduction"] = ratio_json(static_cast<double>(s.totals(MessageClass::inter).bytes),
                                           static_cast<double>(n.totals(MessageClass::inter).bytes));
  if (r.standard.cost && r.nap.cost) {
    cmp["modeled_speedup"] = ratio_json(r.standard.cost->total, r.nap.cost->total);
  } else {
    cmp["modeled_speedup"] = nullptr;
  }
  j["comparison"] = cmp;
  j["verified"] = r.verified();
  return j;
}

inline ordered_json graph_to_json(const CommGraph& g) {
  ordered_json j = ordered_json::object();
  for (Rank r = 0; r < g.num_ranks(); ++r) {
    ordered_json list = ordered_json::array();
    for (const auto& e : g.sends[static_cast<std::size_t>(r)]) list.push_back({{"dest", e.peer}, {"indices", e.indices}});
    j[std::to_string(r)] = list;
  }
  return j;
}

inline ordered_json node_lists_to_json(const std::vector<std::vector<int>>& lists) {
  ordered_json j = ordered_json::object();
  for (std::size_t k = 0; k < lists.size(); ++k) j[std::to_string(k)] = lists[k];
  return j;
}

inline ordered_json pattern_to_json(const StandardPattern& p) { return graph_to_json(p.graph); }

inline ordered_json pattern_to_json(const NodeAwarePattern& p) {
  std::vector<std::vector<int>> node_sends;
  for (int n = 0; n < p.nodes.num_nodes(); ++n) node_sends.push_back(p.nodes.destinations(n));
  ordered_json j;
  j["node_sends"] = node_lists_to_json(node_sends);
  j["node_indices"] = graph_to_json(p.nodes.graph);
  j["send_map"] = node_lists_to_json(p.map.send_map);
  j["recv_map"] = node_lists_to_json(p.map.recv_map);
  j["inter_proc"] = graph_to_json(p.inter.graph);
  j["local_initial"] = graph_to_json(p.local_initial.graph);
  j["local_dist"] = graph_to_json(p.local_dist.graph);
  j["fully_local"] = graph_to_json(p.fully_local.graph);
  return j;
}

// ---------------------------------------------------------------------------
// sweeps

enum class SweepKind { weak, strong };

struct SweepConfig {
  SweepKind kind = SweepKind::weak;
  Index base_rows = 1000;  // rows per process (weak) or global rows (strong)
  std::vector<Index> nnz_per_row{25, 50, 100};
  std::vector<std::pair<int, int>> topologies;  // (nodes, ppn)
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  PartitionChoice partition;
  CostParams params = CostParams::blue_waters();
  AssignOptions assign;
};

inline constexpr const char* kSweepHeader =
    "n_procs,nodes,ppn,nnz_per_row,seed,algorithm,inter_msgs_max,inter_bytes_max,intra_msgs_max,intra_bytes_max,"
    "modeled_seconds,verified";

inline std::string format_seconds(const std::optional<ModeledCost>& c) {
  if (!c) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c->total);
  return buf;
}

inline std::vector<std::pair<int, int>> default_sweep_topologies() {
  std::vector<std::pair<int, int>> out;
  for (int nodes : {2, 4, 8, 16})
    for (int ppn : {2, 4, 8, 16}) out.emplace_back(nodes, ppn);
  return out;
}

/// "2x4,4x4" -> {(2,4),(4,4)}; the empty string is the empty list.
inline std::vector<std::pair<int, int>> parse_topology_list(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto [nodes, ppn] = parse_random_size(item);
    out.emplace_back(static_cast<int>(nodes), static_cast<int>(ppn));
  }
  return out;
}

/// One CSV row per (topology, nnz_per_row, seed, algorithm) in that nesting
/// order. Failed cells are written with verified=false.
inline void run_sweep(const SweepConfig& cfg, std::ostream& csv) {
  csv << kSweepHeader << '\n';
  for (const auto& [nodes, ppn] : cfg.topologies) {
    const Topology topo(nodes, ppn);
    const Index n = cfg.kind == SweepKind::weak ? cfg.base_rows * topo.num_procs() : cfg.base_rows;
    for (Index nnz : cfg.nnz_per_row) {
      for (std::uint64_t seed : cfg.seeds) {
        RunReport rep;
        std::string failure;
        try {
          check_desk_scale(topo, n);
          const auto a = generate_random(n, nnz, seed);
          const auto part = make_partition(cfg.partition, n, topo);
          rep = run_verify(a, "random", part, topo, cfg.params, seed, cfg.assign);
        } catch (const std::exception& e) {
          failure = e.what();
        }
        const std::pair<const char*, const AlgorithmReport*> algos[] = {{"standard", &rep.standard},
                                                                        {"nap", &rep.nap}};
        for (const auto& [name, alg] : algos) {
          const auto& s = alg->summary;
          csv << topo.num_procs() << ',' << nodes << ',' << ppn << ',' << nnz << ',' << seed << ',' << name << ','
              << s.rank_max(MessageClass::inter).messages << ',' << s.rank_max(MessageClass::inter).bytes << ','
              << s.rank_max(MessageClass::intra).messages << ',' << s.rank_max(MessageClass::intra).bytes << ','
              << format_seconds(alg->cost) << ',' << (failure.empty() && alg->verified ? "true" : "false") << '\n';
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// commands

struct CommonOptions {
  MatrixSource source;
  std::optional<int> nodes;
  std::optional<int> ppn;
  std::string partition = "contiguous";
  std::string model_params;
  std::string out;
  bool split_node_lists = false;
};

struct Problem {
  CsrMatrix a;
  Topology topo{1, 1};
  Partition part{std::vector<Rank>{}, 1, PartitionKind::contiguous};
};

inline Problem load_problem(const CommonOptions& o) {
  Problem p;
  p.a = load_matrix(o.source);
  if (p.a.nrows != p.a.ncols) throw UsageError("matrix must be square");
  const bool fixture = o.source.kind == MatrixSource::Kind::fixture;
  const int nodes = o.nodes.value_or(fixture ? fixtures::example1_topology().num_nodes() : 2);
  const int ppn = o.ppn.value_or(fixture ? fixtures::example1_topology().ppn() : 2);
  try {
    p.topo = Topology(nodes, ppn);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  check_desk_scale(p.topo, p.a.nrows);
  p.part = make_partition(parse_partition_choice(o.partition), p.a.nrows, p.topo);
  return p;
}

// Writes to --out when given, else to `out`.
template <class Emit>
void emit(const std::string& path, std::ostream& out, Emit&& body) {
  if (path.empty()) {
    body(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write '" + path + "'");
  body(f);
  if (!f) throw UsageError("failed writing '" + path + "'");
}

inline int cmd_verify(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto p = load_problem(o);
    const auto params = load_params_file(o.model_params);
    const auto rep = run_verify(p.a, describe(o.source), p.part, p.topo, params, o.source.seed,
                                AssignOptions{o.split_node_lists});
    emit(o.out, out, [&](std::ostream& os) { os << to_json(rep).dump(2) << '\n'; });
    if (!rep.verified()) {
      err << "verification failed: parallel result differs from the serial product\n";
      return kExitVerifyFailed;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline int cmd_pattern_dump(const CommonOptions& o, bool node_aware, std::ostream& out, std::ostream& err) {
  try {
    const auto p = load_problem(o);
    ordered_json j = node_aware ? pattern_to_json(build_node_aware_pattern(p.a, p.part, p.topo,
                                                                           AssignOptions{o.split_node_lists}))
                                : pattern_to_json(build_standard_pattern(p.a, p.part, p.topo));
    emit(o.out, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline int cmd_sweep(const SweepConfig& cfg, const std::string& out_path, std::ostream& out, std::ostream& err) {
  try {
    emit(out_path, out, [&](std::ostream& os) { run_sweep(cfg, os); });
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace napspmv::bench
