#include <cmath>
#include <deque>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "cwyc/curriculum/curriculum.hpp"

using namespace cwyc;

namespace {

GoalSpaceSpec one_space() {
  GoalSpaceSpec spec;
  spec.state_dim = 2;
  spec.tasks = {{"loc", {0, 1}, -1}};
  return spec;
}

StateVector at(double x, double y) { return (StateVector(2) << x, y).finished(); }

}  // namespace

TEST(TaskSuccess, TrajectoryThroughGoal) {
  const auto spaces = one_space();
  const Eigen::Vector2d g(1.0, 1.0);
  EXPECT_TRUE(task_success({at(0, 0), at(1, 1), at(3, 3)}, spaces, 0, g, 1.0));
}

TEST(TaskSuccess, FarTrajectoryFails) {
  const auto spaces = one_space();
  const Eigen::Vector2d g(0.0, 0.0);
  const double delta = 1.0;
  const double r = std::sqrt(2.0 * delta);
  EXPECT_FALSE(task_success({at(r, 0), at(0, -r), at(5, 5)}, spaces, 0, g, delta));
  EXPECT_FALSE(task_success({}, spaces, 0, g, delta));
}

TEST(TaskSuccess, MatchesLinearScan) {
  const auto spaces = one_space();
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<StateVector> traj;
    for (int t = 0; t < 20; ++t) traj.push_back(at(uniform(rng, -3, 3), uniform(rng, -3, 3)));
    const Eigen::Vector2d g(uniform(rng, -3, 3), uniform(rng, -3, 3));
    bool want = false;
    for (const auto& s : traj) want = want || ((s[0] - g[0]) * (s[0] - g[0]) + (s[1] - g[1]) * (s[1] - g[1]) <= 1.0);
    ASSERT_EQ(task_success(traj, spaces, 0, g, 1.0), want);
  }
}

TEST(TaskStats, TenSuccesses) {
  TaskStats st(1, 10);
  for (int i = 0; i < 10; ++i) st.update(0, true);
  EXPECT_EQ(st.success_rate(0), 1.0);
}

TEST(TaskStats, Alternating) {
  TaskStats st(1, 10);
  for (int i = 0; i < 10; ++i) st.update(0, i % 2 == 0);
  EXPECT_EQ(st.success_rate(0), 0.5);
}

TEST(TaskStats, ProgressIsDifferenceOfRates) {
  TaskStats st(2, 10);
  st.update(0, true);
  EXPECT_EQ(st.progress(0), 1.0);
  st.update(0, false);
  EXPECT_EQ(st.progress(0), -0.5);
  EXPECT_EQ(st.progress(1), 0.0);
  EXPECT_EQ(st.attempts(0), 2u);
}

TEST(TaskStats, IncrementalMatchesRecomputation) {
  const std::size_t window = 10;
  TaskStats st(3, window);
  std::vector<std::vector<int>> all(3);
  Rng rng(5);
  for (int step = 0; step < 5000; ++step) {
    const std::size_t k = uniform_index(rng, 3);
    const bool s = bernoulli(rng, 0.3 + 0.2 * static_cast<double>(k));
    st.update(k, s);
    all[k].push_back(s);
    const std::size_t m = std::min(window, all[k].size());
    const double want = std::accumulate(all[k].end() - static_cast<std::ptrdiff_t>(m), all[k].end(), 0.0) / static_cast<double>(m);
    ASSERT_EQ(st.success_rate(k), want);
  }
}

TEST(TaskStats, CompetenceIsMeanRate) {
  TaskStats st(4, 10);
  st.update(0, true);
  st.update(1, true);
  st.update(1, false);
  EXPECT_DOUBLE_EQ(st.competence(), (1.0 + 0.5) / 4.0);
  EXPECT_THROW(TaskStats(2, 0), std::invalid_argument);
}

TEST(BanditReward, Examples) {
  EXPECT_EQ(bandit_reward(0.0, false, 0.1), 0.0);
  EXPECT_NEAR(bandit_reward(0.2, true, 0.1), 0.3, 1e-15);
  EXPECT_NEAR(bandit_reward(-0.1, false, 0.1), 0.1, 1e-15);
}

TEST(Bandit, SingleUpdate) {
  Bandit b(1, BanditConfig{});
  b.set_value(0, 0.5);
  b.update(0, 1.0);
  EXPECT_NEAR(b.value(0), 0.55, 1e-15);
}

TEST(Bandit, FixedPoint) {
  Bandit b(1, BanditConfig{});
  for (int i = 0; i < 1000; ++i) b.update(0, 0.37);
  EXPECT_NEAR(b.value(0), 0.37, 1e-3);
}

TEST(Bandit, RewardSwitch) {
  Bandit b(1, BanditConfig{});
  double q = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r = i < 500 ? 0.0 : 1.0;
    b.update(0, r);
    q += 0.1 * (r - q);
  }
  EXPECT_NEAR(b.value(0), 1.0, 1e-2);
  EXPECT_NEAR(b.value(0), q, 1e-12);
}

TEST(Bandit, EqualValuesSampleUniformly) {
  Bandit b(5, BanditConfig{});
  for (std::size_t k = 0; k < 5; ++k) b.set_value(k, 1.0);
  Rng rng(1);
  std::vector<int> counts(5, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[b.sample(rng)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
  // 4 degrees of freedom: the 0.99 quantile is 13.277
  EXPECT_LT(chi2, 13.277);
}

TEST(Bandit, ProportionalSelection) {
  BanditConfig cfg;
  cfg.epsilon = 0.0;
  Bandit b(2, cfg);
  b.set_value(0, 3.0);
  b.set_value(1, 1.0);
  Rng rng(2);
  int first = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) first += b.sample(rng) == 0;
  EXPECT_NEAR(first / static_cast<double>(n), 0.75, 0.02);
  EXPECT_NEAR(b.probabilities()[0], 0.75, 1e-12);
}

TEST(Bandit, FullEpsilonIsUniform) {
  BanditConfig cfg;
  cfg.epsilon = 1.0;
  Bandit b(4, cfg);
  b.set_value(2, 100.0);
  for (double p : b.probabilities()) EXPECT_NEAR(p, 0.25, 1e-12);
  Rng rng(3);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[b.sample(rng)];
  for (int c : counts) EXPECT_NEAR(c / 40000.0, 0.25, 0.02);
}

TEST(Bandit, AllZeroIsUniform) {
  Bandit b(3, BanditConfig{});
  for (double p : b.probabilities()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  Rng rng(4);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 30000; ++i) ++counts[b.sample(rng)];
  for (int c : counts) EXPECT_NEAR(c / 30000.0, 1.0 / 3.0, 0.02);
}

TEST(Bandit, ProbabilitiesSumToOne) {
  Bandit b(5, BanditConfig{});
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    b.update(uniform_index(rng, 5), uniform(rng, 0, 1));
    const auto p = b.probabilities();
    ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  }
}
