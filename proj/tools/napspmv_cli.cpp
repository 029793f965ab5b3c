// napspmv: verify, pattern-dump and sweep drivers for the simulated SpMV.

#include <iostream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "napspmv/bench.hpp"

namespace {

using namespace napspmv;
using namespace napspmv::bench;

struct SourceFlags {
  std::string mtx;
  std::string random;
  std::string fixture;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, SourceFlags& src, CommonOptions& o) {
  auto* g = cmd->add_option_group("matrix source");
  g->add_option("--mtx", src.mtx, "Matrix Market file");
  g->add_option("--random", src.random, "random matrix <rows>x<nnz_per_row>");
  g->add_option("--fixture", src.fixture, "built-in fixture (example1)");
  g->require_option(0, 1);
  cmd->add_option("--seed", src.seed, "random seed")->capture_default_str();
  cmd->add_option("--nodes", o.nodes, "number of nodes");
  cmd->add_option("--ppn", o.ppn, "processes per node");
  cmd->add_option("--partition", o.partition, "contiguous|strided|file:<path>")->capture_default_str();
  cmd->add_option("--model-params", o.model_params, "JSON cost-model parameter file");
  cmd->add_option("--out", o.out, "write output here instead of stdout");
  cmd->add_flag("--split-node-lists", o.split_node_lists,
                "split node payloads across processes when a node has fewer peers than ppn");
}

MatrixSource resolve(const SourceFlags& f) {
  MatrixSource s;
  s.seed = f.seed;
  if (!f.mtx.empty()) {
    s.kind = MatrixSource::Kind::mtx;
    s.path = f.mtx;
  } else if (!f.random.empty()) {
    s.kind = MatrixSource::Kind::random;
    std::tie(s.rows, s.nnz_per_row) = parse_random_size(f.random);
  } else {
    s.kind = MatrixSource::Kind::fixture;
    s.fixture = f.fixture.empty() ? "example1" : f.fixture;
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated standard and node-aware parallel SpMV"};
  app.require_subcommand(1);

  SourceFlags verify_src;
  CommonOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "run both algorithms against the serial product");
  add_common(verify, verify_src, verify_opts);

  SourceFlags dump_src;
  CommonOptions dump_opts;
  bool node_aware = false;
  auto* dump = app.add_subcommand("pattern-dump", "print a communication pattern as JSON");
  add_common(dump, dump_src, dump_opts);
  dump->add_flag("--node-aware", node_aware, "dump the node-aware pattern set");

  std::string kind = "weak";
  Index rows = 1000;
  std::vector<Index> nnz{25, 50, 100};
  std::string topos;
  bool topos_given = false;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string sweep_partition = "contiguous";
  std::string sweep_params;
  std::string sweep_out;
  bool sweep_split = false;
  auto* sweep = app.add_subcommand("sweep", "weak or strong scaling sweep over random matrices, CSV output");
  sweep->add_option("--kind", kind, "weak|strong")->check(CLI::IsMember({"weak", "strong"}))->capture_default_str();
  sweep->add_option("--rows", rows, "rows per process (weak) or global rows (strong)")->capture_default_str();
  sweep->add_option("--nnz", nnz, "nonzeros per row, comma separated")->delimiter(',');
  sweep->add_option("--topos", topos, "topologies as <nodes>x<ppn>, comma separated");
  sweep->add_option("--seeds", seeds, "seeds, comma separated")->delimiter(',');
  sweep->add_option("--partition", sweep_partition, "contiguous|strided")->capture_default_str();
  sweep->add_option("--model-params", sweep_params, "JSON cost-model parameter file");
  sweep->add_option("--out", sweep_out, "write CSV here instead of stdout");
  sweep->add_flag("--split-node-lists", sweep_split, "split node payloads across processes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  topos_given = sweep->count("--topos") > 0;

  try {
    if (*verify) {
      verify_opts.source = resolve(verify_src);
      return cmd_verify(verify_opts, std::cout, std::cerr);
    }
    if (*dump) {
      dump_opts.source = resolve(dump_src);
      return cmd_pattern_dump(dump_opts, node_aware, std::cout, std::cerr);
    }
    SweepConfig cfg;
    cfg.kind = kind == "weak" ? SweepKind::weak : SweepKind::strong;
    cfg.base_rows = rows;
    cfg.nnz_per_row = nnz;
    cfg.topologies = topos_given ? parse_topology_list(topos) : default_sweep_topologies();
    cfg.seeds = seeds;
    cfg.partition = parse_partition_choice(sweep_partition);
    if (cfg.partition.kind == PartitionKind::explicit_map)
      throw UsageError("sweep supports contiguous or strided partitions only");
    cfg.params = load_params_file(sweep_params);
    cfg.assign.split_short_lists = sweep_split;
    return cmd_sweep(cfg, sweep_out, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
