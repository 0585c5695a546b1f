#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <set>

#include "cgpnas/cgp.hpp"
#include "cgpnas/search_space.hpp"

using namespace cgpnas;

namespace {

GenomeSchema schema_of(int rows, int cols, int lb, int functions, int arity = 2, std::vector<int> hyper = {}) {
  GridConfig g;
  g.rows = rows;
  g.cols = cols;
  g.level_back = lb;
  g.max_arity = arity;
  return {g, std::vector<int>(static_cast<std::size_t>(functions), arity), std::move(hyper)};
}

// Reachability by BFS over explicit edges read straight from the gene layout.
std::set<int> reachable(const GenomeSchema& s, const IntegerGenome& g, const std::vector<int>& arity_of) {
  const int width = 1 + s.grid.max_arity + static_cast<int>(s.hyper_totals.size());
  const int n_in = s.grid.n_inputs;
  std::set<int> seen;
  std::queue<int> q;
  q.push(g.genes.back());
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    if (v < n_in || seen.count(v - n_in)) continue;
    const int node = v - n_in;
    seen.insert(node);
    const int base = node * width;
    for (int i = 0; i < arity_of[static_cast<std::size_t>(g.genes[static_cast<std::size_t>(base)])]; ++i)
      q.push(g.genes[static_cast<std::size_t>(base + 1 + i)]);
  }
  return seen;
}

}  // namespace

TEST(RandomGenome, SingleCellGridHasOneShape) {
  auto s = schema_of(1, 1, 1, 1, 1);
  auto g = random_genome(s, 0);
  ASSERT_EQ(g.genes.size(), 3u);
  EXPECT_EQ(g.function(s, 0), 0);
  EXPECT_EQ(g.input(s, 0, 0), 0);
  EXPECT_EQ(g.output(), 1);  // node 0 sits after the single block input
}

TEST(RandomGenome, V1LengthAndWidth) {
  GenomeSchema s = template_default(Variant::v1).schema(0);
  s.arities = std::vector<int>(68, 2);
  EXPECT_EQ(s.record_width(), 3);
  auto g = random_genome(s, 42);
  EXPECT_EQ(g.genes.size(), 376u);
}

TEST(RandomGenome, Deterministic) {
  auto s = schema_of(5, 25, 1, 68);
  EXPECT_EQ(random_genome(s, 7), random_genome(s, 7));
  EXPECT_NE(random_genome(s, 7), random_genome(s, 8));
}

TEST(RandomGenome, RejectsEmptyGrid) {
  auto s = schema_of(0, 3, 1, 4);
  EXPECT_THROW(random_genome(s, 1), ConfigError);
}

TEST(RandomGenome, AlwaysValid) {
  const std::vector<GenomeSchema> schemas = {schema_of(5, 25, 1, 68), schema_of(10, 4, 1, 11, 2, {4, 2}),
                                             schema_of(3, 6, 3, 5), schema_of(2, 2, 1, 2)};
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    const auto& s = schemas[seed % schemas.size()];
    auto v = validate(s, random_genome(s, seed));
    ASSERT_FALSE(v) << "seed " << seed << ": " << v->reason;
  }
}

TEST(TraceActive, UnreachableNode) {
  auto s = schema_of(1, 2, 1, 1, 1);
  IntegerGenome g{{0, 0, 0, 0, 1}};  // node0 <- input, node1 <- node0, output = node 0
  ASSERT_FALSE(validate(s, g));
  auto t = trace_active(s, g);
  EXPECT_EQ(t.nodes, std::vector<int>{0});
  EXPECT_FALSE(t.contains(1));
}

TEST(TraceActive, FullChain) {
  auto s = schema_of(1, 4, 1, 1, 1);
  IntegerGenome g{{0, 0, 0, 1, 0, 2, 0, 3, 4}};
  ASSERT_FALSE(validate(s, g));
  EXPECT_EQ(trace_active(s, g).nodes, (std::vector<int>{0, 1, 2, 3}));
}

TEST(TraceActive, MatchesBruteForceReachability) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 3000; ++trial) {
    const int rows = 1 + static_cast<int>(gen() % 4), cols = 1 + static_cast<int>(gen() % 4);
    const int lb = 1 + static_cast<int>(gen() % static_cast<unsigned>(cols));
    GridConfig grid{rows, cols, lb};
    std::vector<int> arities = {0, 1, 2, 1, 2};
    GenomeSchema s{grid, arities, trial % 2 ? std::vector<int>{4, 2} : std::vector<int>{}};
    auto g = random_genome(s, static_cast<std::uint64_t>(trial));
    auto t = trace_active(s, g);
    std::set<int> got(t.nodes.begin(), t.nodes.end());
    ASSERT_EQ(got, reachable(s, g, arities)) << "trial " << trial;
  }
}

TEST(Validate, FunctionOutOfRange) {
  auto s = schema_of(2, 2, 1, 3);
  auto g = random_genome(s, 5);
  g.genes[s.record_offset(1)] = 3;
  auto v = validate(s, g);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->gene, s.record_offset(1));
}

TEST(Validate, ForwardConnection) {
  auto s = schema_of(1, 3, 1, 2);
  auto g = random_genome(s, 5);
  g.genes[s.record_offset(1) + 1] = 1 + 2;  // node 1 reading node 2 (later column)
  auto v = validate(s, g);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->gene, s.record_offset(1) + 1);
}

TEST(Validate, LevelBackExceeded) {
  auto s = schema_of(1, 4, 1, 2);
  auto g = random_genome(s, 5);
  g.genes[s.record_offset(3) + 1] = 1 + 1;  // column 3 reading column 1 with level-back 1
  EXPECT_TRUE(validate(s, g));
  g.genes[s.record_offset(3) + 1] = 0;  // block input is always legal
  EXPECT_FALSE(validate(s, g));
}

TEST(Validate, WrongLength) {
  auto s = schema_of(2, 2, 1, 3);
  IntegerGenome g{{0, 0}};
  EXPECT_TRUE(validate(s, g));
}

TEST(Schema, ConnectionTargets) {
  auto s = schema_of(2, 4, 2, 3);
  EXPECT_EQ(s.connection_term(0), 1);
  EXPECT_EQ(s.connection_term(1), 3);
  EXPECT_EQ(s.connection_term(3), 5);
  // column 3 with level-back 2 sees the input and columns 1..2 (nodes 2..5)
  std::vector<int> targets;
  for (int j = 0; j < s.connection_term(3); ++j) targets.push_back(s.connection_target(3, j));
  EXPECT_EQ(targets, (std::vector<int>{0, 3, 4, 5, 6}));
  EXPECT_EQ(s.connection_slot(3, 5), 3);
  EXPECT_FALSE(s.connection_slot(3, 1));
}
