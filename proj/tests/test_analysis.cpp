#include <gtest/gtest.h>

#include <random>

#include "cgpnas/analysis.hpp"
#include "oracles.hpp"

using namespace cgpnas;

namespace {

std::vector<ObjectiveVector> random_front(std::mt19937_64& gen, std::size_t n) {
  // points on a noisy decreasing curve, then filtered to the first front
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ObjectiveVector> p;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(gen);
    p.push_back({x, (1 - x) * (1 - x) + 0.3 * u(gen)});
  }
  std::vector<ObjectiveVector> f;
  const auto fronts = nondominated_sort(p);
  for (auto i : fronts[0]) f.push_back(p[i]);
  return f;
}

std::vector<oracle::Point> plain(const std::vector<ObjectiveVector>& p) {
  std::vector<oracle::Point> out;
  for (auto& x : p) out.emplace_back(x.error, x.madds);
  return out;
}

}  // namespace

TEST(Hypervolume, UnitBox) {
  const std::vector<ObjectiveVector> f = {{1, 1}};
  EXPECT_DOUBLE_EQ(hypervolume_2d(f, {2, 2}), 1.0);
}

TEST(Hypervolume, TwoPoints) {
  const std::vector<ObjectiveVector> f = {{0.5, 1}, {1, 0.5}};
  EXPECT_NEAR(hypervolume_2d(f, {2, 2}), 2.0, 1e-9);
  const auto mc = oracle::mc_hypervolume(plain(f), {2, 2}, 10'000'000, 1);
  EXPECT_NEAR(mc.mean, 2.0, 1e-3);
}

TEST(Hypervolume, DominatedPointChangesNothing) {
  std::vector<ObjectiveVector> f = {{0.5, 1}, {1, 0.5}};
  const double before = hypervolume_2d(f, {2, 2});
  f.push_back({1.5, 1.5});
  EXPECT_EQ(hypervolume_2d(f, {2, 2}), before);
}

TEST(Hypervolume, PointsOutsideReferenceAreClipped) {
  const std::vector<ObjectiveVector> f = {{3, 0}, {1, 1}, {0, 2}};
  EXPECT_DOUBLE_EQ(hypervolume_2d(f, {2, 2}), 1.0);
  const std::vector<ObjectiveVector> none = {{3, 3}};
  EXPECT_EQ(hypervolume_2d(none, {2, 2}), 0.0);
}

TEST(Hypervolume, MatchesGridOracle) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ObjectiveVector> p(1 + gen() % 15);
    for (auto& x : p) x = {u(gen), u(gen)};
    EXPECT_NEAR(hypervolume_2d(p, {1.1, 1.2}), oracle::grid_hypervolume(plain(p), {1.1, 1.2}), 1e-12);
  }
}

TEST(Hypervolume, ContributionsMatchOracle) {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_front(gen, 2 + gen() % 12);
    const ObjectiveVector ref{1.5, 2.0};
    const auto got = hypervolume_contributions(f, ref);
    const auto want = oracle::contributions(plain(f), {1.5, 2.0});
    for (std::size_t i = 0; i < f.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Knee, SymmetricFront) {
  const std::vector<ObjectiveVector> f = {{0, 10}, {4, 4}, {10, 0}};
  const auto k = knee_and_boundary(f);
  EXPECT_EQ(k.knee, 1u);
  EXPECT_EQ(k.boundary_heavy, 0u);
  EXPECT_EQ(k.boundary_light, 2u);
}

TEST(Knee, TwoPointTieGoesToLowerError) {
  const std::vector<ObjectiveVector> f = {{1, 0}, {0, 1}};
  const auto k = knee_and_boundary(f);
  EXPECT_EQ(k.knee, 1u);
}

TEST(Knee, MatchesExhaustiveSearch) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = random_front(gen, 1 + gen() % 40);
    ASSERT_EQ(knee_and_boundary(f).knee, oracle::knee(plain(f))) << trial;
  }
}

TEST(NormalizedHv, ConstantAndIncreasing) {
  const std::vector<ObjectiveVector> all = {{0, 0}, {1, 1}, {0.5, 0.5}, {0.2, 0.8}, {0.8, 0.2}};
  const auto b = bounds_of(all);
  const std::vector<ObjectiveVector> s0 = {{0.5, 0.5}};
  const std::vector<ObjectiveVector> s1 = {{0.5, 0.5}, {0.2, 0.8}};
  const std::vector<ObjectiveVector> s2 = {{0.5, 0.5}, {0.2, 0.8}, {0.8, 0.2}};
  const auto flat = normalized_hv_series({s0, s0, s0}, b);
  EXPECT_EQ(flat[0], flat[1]);
  EXPECT_EQ(flat[1], flat[2]);
  const auto up = normalized_hv_series({s0, s1, s2}, b);
  EXPECT_LT(up[0], up[1]);
  EXPECT_LT(up[1], up[2]);
  EXPECT_DOUBLE_EQ(up[0], 0.25);
}
