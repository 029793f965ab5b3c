#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "napspmv/blocks.hpp"
#include "napspmv/fixtures.hpp"
#include "napspmv/generate.hpp"
#include "napspmv/matrix_market.hpp"
#include "test_util.hpp"

using namespace napspmv;

namespace {

CsrMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_matrix_market(in);
}

int parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

// Matrix Market

TEST(MatrixMarket, DataFileMatchesFixture) {
  std::ifstream in(test_support::data_path("example1.mtx"));
  ASSERT_TRUE(in);
  const auto a = parse_matrix_market(in);
  EXPECT_EQ(a, fixtures::example1_matrix());
  EXPECT_EQ(a.nnz(), 17);
}

TEST(MatrixMarket, GeneralReal) {
  const auto a = parse(
      "%%MatrixMarket matrix coordinate real general\n"
      "% comment\n"
      "3 3 3\n"
      "1 1 2.5\n"
      "3 2 -1\n"
      "2 3 4e2\n");
  validate(a);
  EXPECT_EQ(a.row_offsets, (std::vector<Index>{0, 1, 2, 3}));
  EXPECT_EQ(a.col_indices, (std::vector<Index>{0, 2, 1}));
  EXPECT_EQ(a.values, (std::vector<double>{2.5, 400.0, -1.0}));
}

TEST(MatrixMarket, SymmetricIsExpanded) {
  const auto a = parse(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "3 3 3\n"
      "1 1 1\n"
      "2 1 2\n"
      "3 2 3\n");
  EXPECT_EQ(a.nnz(), 5);
  EXPECT_EQ(a.row_cols(0).size(), 2u);
  EXPECT_EQ(a.row_values(0)[1], 2.0);
  EXPECT_EQ(a.row_values(1)[0], 2.0);
  EXPECT_EQ(a.row_values(1)[1], 3.0);
}

TEST(MatrixMarket, PatternAndIntegerFields) {
  const auto p = parse("%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n");
  EXPECT_EQ(p.values, (std::vector<double>{1.0, 1.0}));
  const auto i = parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n2 2 7\n");
  EXPECT_EQ(i.values, (std::vector<double>{7.0}));
}

TEST(MatrixMarket, DuplicatesSummedExplicitZerosKept) {
  const auto a = parse(
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 3\n"
      "1 1 1\n"
      "1 1 2\n"
      "2 2 0\n");
  EXPECT_EQ(a.nnz(), 2);
  EXPECT_EQ(a.values, (std::vector<double>{3.0, 0.0}));
}

TEST(MatrixMarket, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line(""), 1);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array real general\n2 2\n"), 1);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate complex general\n"), 1);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n% c\n2 x 1\n"), 3);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n"), 4);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1\n"), 3);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n"), 3);
}

TEST(MatrixMarket, WriteReadRoundTrip) {
  const auto a = generate_random(50, 7, 3);
  std::stringstream ss;
  write_matrix_market(ss, a);
  EXPECT_EQ(parse_matrix_market(ss), a);
}

// CSR and local kernels

TEST(Csr, FromTripletsRejectsOutOfRange) {
  EXPECT_THROW(from_triplets(2, 2, {{2, 0, 1.0}}), std::out_of_range);
  EXPECT_THROW(from_triplets(2, 2, {{0, -1, 1.0}}), std::out_of_range);
}

TEST(Csr, ValidateCatchesUnsortedColumns) {
  CsrMatrix m = CsrMatrix::empty(1, 3);
  m.row_offsets = {0, 2};
  m.col_indices = {2, 1};
  m.values = {1, 1};
  EXPECT_THROW(validate(m), std::invalid_argument);
}

TEST(Csr, SerialSpmvOnFixture) {
  const auto a = fixtures::example1_matrix();
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  const auto w = run_serial_spmv(a, v);
  // row 0: 1*1 + 2*2 + 4*4 + 6*6
  EXPECT_DOUBLE_EQ(w[0], 1 + 4 + 16 + 36);
  // row 5: 51*1 + 56*6
  EXPECT_DOUBLE_EQ(w[5], 51 + 336);
}

TEST(Csr, LocalSpmvAccumulatesAndChecksShapes) {
  const auto a = from_triplets(2, 3, {{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, 3.0}});
  const std::vector<double> x{1, 1, 1};
  std::vector<double> y{10, 20};
  local_spmv(a, x, y);
  EXPECT_EQ(y, (std::vector<double>{13, 23}));
  std::vector<double> short_y(1);
  EXPECT_THROW(local_spmv(a, x, short_y), std::invalid_argument);
}

// generators

TEST(Generate, FixedNonzerosPerRowAndDeterministic) {
  const auto a = generate_random(200, 25, 7);
  validate(a);
  for (Index i = 0; i < a.nrows; ++i) {
    EXPECT_EQ(a.row_degree(i), 25);
    for (double v : a.row_values(i)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  EXPECT_EQ(a, generate_random(200, 25, 7));
  EXPECT_NE(a, generate_random(200, 25, 8));
}

TEST(Generate, DenseRowAndErrors) {
  const auto a = generate_random(10, 10, 1);
  EXPECT_EQ(a.nnz(), 100);
  EXPECT_THROW(generate_random(10, 11, 1), std::invalid_argument);
  const auto v = generate_vector(1000, 4);
  EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x >= -1.0 && x < 1.0; }));
  EXPECT_EQ(v, generate_vector(1000, 4));
}

// partitions

TEST(Partition, ContiguousRemainderGoesFirst) {
  const auto p = partition_contiguous(10, Topology(2, 2));
  EXPECT_EQ(p.assignment(), (std::vector<Rank>{0, 0, 0, 1, 1, 1, 2, 2, 3, 3}));
  EXPECT_EQ(p.num_rows(0), 3);
  EXPECT_EQ(p.num_rows(3), 2);
  EXPECT_EQ(p.local_index(4), 1);
  EXPECT_EQ(p.kind(), PartitionKind::contiguous);
}

TEST(Partition, Strided) {
  const auto p = partition_strided(7, Topology(1, 3));
  EXPECT_EQ(p.assignment(), (std::vector<Rank>{0, 1, 2, 0, 1, 2, 0}));
  const auto rows = p.rows_of(0);
  EXPECT_EQ(std::vector<Index>(rows.begin(), rows.end()), (std::vector<Index>{0, 3, 6}));
  EXPECT_EQ(p.local_index(6), 2);
}

TEST(Partition, TooFewRowsRejected) {
  EXPECT_THROW(partition_contiguous(3, Topology(2, 2)), std::invalid_argument);
  EXPECT_THROW(partition_strided(3, Topology(2, 2)), std::invalid_argument);
}

TEST(Partition, ExplicitAndFile) {
  const Topology t(1, 2);
  const auto p = partition_explicit({1, 0, 1}, t);
  EXPECT_EQ(p.kind(), PartitionKind::explicit_map);
  EXPECT_EQ(p.num_rows(1), 2);
  EXPECT_THROW(partition_explicit({0, 2, 1}, t), std::out_of_range);

  std::istringstream good("1\n0\n1\n");
  EXPECT_EQ(partition_from_file(good, 3, t).assignment(), (std::vector<Rank>{1, 0, 1}));
  std::istringstream short_file("1\n0\n");
  EXPECT_THROW(partition_from_file(short_file, 3, t), std::invalid_argument);
  std::istringstream bad_rank("1\n0\n5\n");
  EXPECT_THROW(partition_from_file(bad_rank, 3, t), std::out_of_range);

  std::ifstream f(test_support::data_path("example1.part"));
  EXPECT_EQ(partition_from_file(f, 6, fixtures::example1_topology()).assignment(),
            fixtures::example1_partition().assignment());
}

// block split

TEST(Blocks, FixtureRankZeroStandard) {
  const auto a = fixtures::example1_matrix();
  const auto b = split_blocks(a, fixtures::example1_partition(), fixtures::example1_topology(), 0, SplitMode::standard);
  EXPECT_EQ(b.on_process.nnz(), 1);
  EXPECT_EQ(b.off_process.col_map, (std::vector<Index>{1, 3, 5}));
  EXPECT_EQ(b.on_node.matrix.nnz(), 0);
  EXPECT_EQ(b.off_node.matrix.nnz(), 0);
}

TEST(Blocks, FixtureRankZeroNodeAware) {
  const auto a = fixtures::example1_matrix();
  const auto b = split_blocks(a, fixtures::example1_partition(), fixtures::example1_topology(), 0, SplitMode::node_aware);
  EXPECT_EQ(b.on_node.col_map, (std::vector<Index>{1}));
  EXPECT_EQ(b.off_node.col_map, (std::vector<Index>{3, 5}));
  EXPECT_EQ(b.off_process.matrix.nnz(), 0);
}

TEST(Blocks, SplitConservesEveryEntry) {
  const auto a = generate_random(300, 9, 11);
  const Topology t(3, 4);
  for (const auto& part : {partition_contiguous(300, t), partition_strided(300, t)}) {
    for (SplitMode mode : {SplitMode::standard, SplitMode::node_aware}) {
      const auto blocks = split_all_blocks(a, part, t, mode);
      Index total = 0;
      for (Rank r = 0; r < t.num_procs(); ++r) {
        const auto& b = blocks[static_cast<std::size_t>(r)];
        total += b.nnz();
        for (const auto* blk : {&b.off_process, &b.on_node, &b.off_node}) {
          EXPECT_TRUE(std::is_sorted(blk->col_map.begin(), blk->col_map.end()));
          for (Index j : blk->col_map) EXPECT_NE(part.owner(j), r);
        }
        for (Index j : b.on_node.col_map) EXPECT_TRUE(t.same_node(part.owner(j), r));
        for (Index j : b.off_node.col_map) EXPECT_FALSE(t.same_node(part.owner(j), r));
      }
      EXPECT_EQ(total, a.nnz());
    }
  }
}

TEST(Blocks, RejectsMismatchedInputs) {
  const auto a = generate_random(8, 2, 1);
  const Topology t(1, 2);
  EXPECT_THROW(split_blocks(a, partition_contiguous(9, t), t, 0, SplitMode::standard), std::invalid_argument);
  EXPECT_THROW(split_blocks(a, partition_contiguous(8, Topology(1, 4)), t, 0, SplitMode::standard),
               std::invalid_argument);
  const auto rect = from_triplets(8, 9, {});
  EXPECT_THROW(split_blocks(rect, partition_contiguous(8, t), t, 0, SplitMode::standard), std::invalid_argument);
}
