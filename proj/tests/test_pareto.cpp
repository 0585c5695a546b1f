#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "cgpnas/pareto.hpp"
#include "oracles.hpp"

using namespace cgpnas;

namespace {

std::vector<ObjectiveVector> random_points(std::mt19937_64& gen, std::size_t n, bool coarse) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ObjectiveVector> p(n);
  for (auto& x : p) {
    x = {u(gen), u(gen)};
    if (coarse) x = {std::floor(x.error * 8), std::floor(x.madds * 8)};
  }
  return p;
}

std::vector<oracle::Point> plain(const std::vector<ObjectiveVector>& p) {
  std::vector<oracle::Point> out;
  for (auto& x : p) out.emplace_back(x.error, x.madds);
  return out;
}

}  // namespace

TEST(Dominance, Basics) {
  EXPECT_TRUE(dominates({1, 1}, {1, 2}));
  EXPECT_FALSE(dominates({1, 1}, {1, 1}));
  EXPECT_TRUE(weakly_dominates({1, 1}, {1, 1}));
  EXPECT_FALSE(dominates({1, 2}, {2, 1}));
}

TEST(Sort, SmallCase) {
  const std::vector<ObjectiveVector> p = {{1, 2}, {2, 1}, {3, 3}};
  const auto f = nondominated_sort(p);
  EXPECT_EQ(f, (std::vector<std::vector<std::size_t>>{{0, 1}, {2}}));
}

TEST(Sort, IdenticalPoints) {
  const std::vector<ObjectiveVector> p(5, {0.3, 0.3});
  const auto f = nondominated_sort(p);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].size(), 5u);
}

TEST(Sort, MatchesBruteForce) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_points(gen, 1 + gen() % 200, trial % 3 == 0);
    ASSERT_EQ(nondominated_sort(p), oracle::fronts(plain(p))) << trial;
  }
}

TEST(Crowding, TwoPointsInfinite) {
  const std::vector<ObjectiveVector> p = {{0, 1}, {1, 0}};
  for (double d : crowding_distance(p)) EXPECT_TRUE(std::isinf(d));
}

TEST(Crowding, HandComputedThreePoints) {
  const std::vector<ObjectiveVector> p = {{0, 2}, {1, 1}, {2, 0}};
  const auto d = crowding_distance(p);
  EXPECT_TRUE(std::isinf(d[0]));
  EXPECT_TRUE(std::isinf(d[2]));
  EXPECT_EQ(d[1], 2.0);
}

TEST(Crowding, PermutationInvariant) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_points(gen, 12, false);
    const auto d = crowding_distance(p);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<ObjectiveVector> q;
    for (auto i : perm) q.push_back(p[i]);
    const auto e = crowding_distance(q);
    for (std::size_t i = 0; i < perm.size(); ++i) ASSERT_EQ(e[i], d[perm[i]]);
  }
}

TEST(Archive, KeepsOnlyNondominated) {
  ElitistArchive a;
  EXPECT_TRUE(a.insert({1, {0.5, 10}}));
  EXPECT_FALSE(a.insert({2, {0.5, 10}}));  // duplicate
  EXPECT_FALSE(a.insert({3, {0.6, 11}}));
  EXPECT_TRUE(a.insert({4, {0.3, 20}}));
  EXPECT_TRUE(a.insert({5, {0.2, 5}}));  // dominates both
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a.members()[0].id, 5u);
}

TEST(Archive, MatchesFirstFrontOfEverything) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_points(gen, 300, trial % 2 == 0);
    ElitistArchive a;
    for (std::size_t i = 0; i < p.size(); ++i) a.insert({i, p[i]});
    // distinct objective vectors of the first front
    std::set<std::pair<double, double>> want;
    const auto layers = oracle::fronts(plain(p));
    for (auto i : layers[0]) want.insert({p[i].error, p[i].madds});
    std::set<std::pair<double, double>> got;
    for (auto& m : a.members()) got.insert({m.objectives.error, m.objectives.madds});
    ASSERT_EQ(got, want);
    ASSERT_EQ(a.size(), want.size());
    for (std::size_t i = 1; i < a.size(); ++i) ASSERT_LT(a.members()[i - 1].objectives.error, a.members()[i].objectives.error);
  }
}
