#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cwyc/env/playground.hpp"
#include "cwyc/goal_proposal/goal_proposal.hpp"
#include "cwyc/goal_proposal/relational_net.hpp"

using namespace cwyc;

namespace {

// straight-line evaluation over explicitly enumerated pairs
double oracle_value(const RelationalNet& net, const Eigen::VectorXd& s) {
  const std::size_t n = static_cast<std::size_t>(s.size());
  const std::size_t P = n * (n - 1) / 2;
  const Eigen::VectorXd& w = net.params();
  double e = 0.0;
  std::size_t p = 0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l, ++p) {
      const double r = w[static_cast<Eigen::Index>(p)] * s[static_cast<Eigen::Index>(k)] +
                       w[static_cast<Eigen::Index>(P + p)] * s[static_cast<Eigen::Index>(l)] +
                       w[static_cast<Eigen::Index>(2 * P + p)];
      e += r * r;
    }
  return std::exp(-std::exp(w[static_cast<Eigen::Index>(3 * P)]) * e);
}

Eigen::VectorXd random_state(std::size_t n, Rng& rng, double h = 5.0) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = uniform(rng, -h, h);
  return s;
}

RelationalNetConfig trained_config() {
  RelationalNetConfig c;
  c.learning_rate = 3e-3;
  return c;
}

// Desk layout: agent x,y at 0,1; tool x,y at 2,3.
struct AgentMeetsTool {
  std::size_t dim = StateLayout{4}.dim();
  Eigen::VectorXd positive(Rng& rng) const {
    Eigen::VectorXd s = random_state(dim, rng);
    s[2] = s[0];
    s[3] = s[1];
    return s;
  }
  Eigen::VectorXd negative(Rng& rng) const { return random_state(dim, rng); }
};

RelationalNet train_synthetic(std::uint64_t seed, int iterations) {
  Rng rng(seed);
  AgentMeetsTool gen;
  RelationalNet net = RelationalNet::random(gen.dim, trained_config(), rng);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(gen.dim), 64);
  Eigen::VectorXd y(64);
  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index c = 0; c < 64; ++c) {
      const bool pos = c < 32;
      x.col(c) = pos ? gen.positive(rng) : gen.negative(rng);
      y[c] = pos ? 1.0 : 0.0;
    }
    net.train_step(x, y);
  }
  return net;
}

}  // namespace

TEST(RelationalNet, ZeroWeightsGiveOne) {
  RelationalNet net(5, RelationalNetConfig{});
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(net.evaluate(random_state(5, rng)), 1.0);
}

TEST(RelationalNet, SinglePairExample) {
  RelationalNet net(2, RelationalNetConfig{});
  net.w1(0) = 1.0;
  net.w2(0) = -1.0;
  net.set_gamma(1.0);
  EXPECT_EQ(net.evaluate(Eigen::Vector2d(0.7, 0.7)), 1.0);
  EXPECT_NEAR(net.evaluate(Eigen::Vector2d(1.7, 0.7)), std::exp(-1.0), 1e-15);
}

TEST(RelationalNet, MatchesStraightLineOracle) {
  Rng rng(2);
  RelationalNetConfig cfg;
  cfg.init_scale = 0.5;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 8);
    RelationalNet net = RelationalNet::random(n, cfg, rng);
    net.set_gamma(uniform(rng, 0.01, 2.0));
    const Eigen::VectorXd s = random_state(n, rng, 2.0);
    const double v = net.evaluate(s);
    EXPECT_NEAR(v, oracle_value(net, s), 1e-12);
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RelationalNet, SymmetricUnderCoordinateReversal) {
  Rng rng(3);
  RelationalNetConfig cfg;
  cfg.init_scale = 0.5;
  const std::size_t n = 6;
  RelationalNet a = RelationalNet::random(n, cfg, rng);
  RelationalNet b(n, cfg);
  b.set_gamma(a.gamma());
  for (std::size_t p = 0; p < a.num_pairs(); ++p) {
    const auto [k, l] = a.pair(p);
    const std::size_t q = b.pair_index(n - 1 - l, n - 1 - k);
    b.w1(q) = a.w2(p);
    b.w2(q) = a.w1(p);
    b.w3(q) = a.w3(p);
  }
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd s = random_state(n, rng, 2.0);
    EXPECT_NEAR(a.evaluate(s), b.evaluate(s.reverse()), 1e-12);
  }
}

TEST(RelationalNet, GradientMatchesFiniteDifference) {
  Rng rng(4);
  RelationalNetConfig cfg;
  cfg.init_scale = 0.3;
  for (int trial = 0; trial < 10; ++trial) {
    RelationalNet net = RelationalNet::random(4, cfg, rng);
    Eigen::MatrixXd x(4, 8);
    Eigen::VectorXd y(8);
    for (Eigen::Index c = 0; c < 8; ++c) {
      x.col(c) = random_state(4, rng, 1.0);
      y[c] = bernoulli(rng, 0.5) ? 1.0 : 0.0;
    }
    const auto [loss, grad] = net.loss_and_gradient(x, y);
    const Eigen::VectorXd p = net.params();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-6;
      net.params()[i] = p[i] + h;
      const double up = net.loss_and_gradient(x, y).first;
      net.params()[i] = p[i] - h;
      const double down = net.loss_and_gradient(x, y).first;
      net.params()[i] = p[i];
      const double fd = (up - down) / (2 * h);
      ASSERT_NEAR(grad[i], fd, 1e-7 + 1e-4 * std::abs(fd)) << "param " << i;
    }
  }
}

TEST(RelationalNet, ArgmaxEquality) {
  RelationalNet net(2, RelationalNetConfig{});
  net.w1(0) = 1.0;
  net.w2(0) = -1.0;
  const Eigen::VectorXd g = net.argmax(Eigen::Vector2d(0.0, 4.2), {1});
  EXPECT_NEAR(g[0], 4.2, 1e-6);
  EXPECT_EQ(g[1], 4.2);
}

TEST(RelationalNet, ArgmaxOffset) {
  RelationalNet net(2, RelationalNetConfig{});
  net.w1(0) = 1.0;
  net.w2(0) = -1.0;
  net.w3(0) = -1.0;
  const Eigen::VectorXd g = net.argmax(Eigen::Vector2d(0.0, 4.2), {1});
  EXPECT_NEAR(g[0], 5.2, 1e-6);
}

TEST(RelationalNet, ArgmaxKeepsPinnedBitExact) {
  Rng rng(5);
  RelationalNetConfig cfg;
  cfg.init_scale = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    RelationalNet net = RelationalNet::random(8, cfg, rng);
    const Eigen::VectorXd s = random_state(8, rng);
    const std::vector<std::size_t> pinned{2, 3, 6};
    const Eigen::VectorXd g = net.argmax(s, pinned);
    for (auto i : pinned) ASSERT_EQ(g[static_cast<Eigen::Index>(i)], s[static_cast<Eigen::Index>(i)]);
  }
  RelationalNet net(3, cfg);
  EXPECT_THROW(net.argmax(Eigen::Vector3d::Zero(), {3}), std::out_of_range);
  EXPECT_THROW(net.argmax(Eigen::Vector2d::Zero(), {}), std::invalid_argument);
}

TEST(RelationalNet, ArgmaxMatchesGridSearch) {
  Rng rng(6);
  RelationalNetConfig cfg;
  cfg.init_scale = 1.0;
  const double step = 0.05;
  for (int trial = 0; trial < 200; ++trial) {
    RelationalNet net = RelationalNet::random(4, cfg, rng);
    net.set_gamma(uniform(rng, 0.05, 1.0));
    const Eigen::VectorXd s = random_state(4, rng);
    const Eigen::VectorXd g = net.argmax(s, {2, 3});
    const double analytic = net.evaluate(g);
    double best = -1.0, cell = 0.0;
    Eigen::VectorXd x = s;
    for (int a = 0; a <= 200; ++a)
      for (int b = 0; b <= 200; ++b) {
        x[0] = -5.0 + a * step;
        x[1] = -5.0 + b * step;
        const double v = net.evaluate(x);
        if (v > best) {
          best = v;
          Eigen::VectorXd y = x;
          cell = 0.0;
          for (const auto& d : {Eigen::Vector2d(step, 0), Eigen::Vector2d(-step, 0), Eigen::Vector2d(0, step), Eigen::Vector2d(0, -step)}) {
            y[0] = x[0] + d[0];
            y[1] = x[1] + d[1];
            cell = std::max(cell, std::abs(net.evaluate(y) - v));
          }
        }
      }
    ASSERT_GE(analytic, best - cell - 1e-9) << "trial " << trial;
  }
}

TEST(LabelRollout, NoSwitchNoSurprise) {
  std::vector<StateVector> st(5, StateVector::Zero(2));
  const auto out = label_rollout(st, std::vector<std::uint8_t>(5, 0), true, std::vector<std::uint8_t>(5, 0));
  ASSERT_EQ(out.size(), 5u);
  for (const auto& s : out) EXPECT_EQ(s.target, 0.0);
}

TEST(LabelRollout, SurpriseDiscardsLaterSteps) {
  std::vector<StateVector> st;
  for (int t = 0; t <= 100; ++t) st.push_back(StateVector::Constant(2, t));
  std::vector<std::uint8_t> sur(101, 0);
  sur[40] = 1;
  const auto out = label_rollout(st, std::vector<std::uint8_t>(101, 0), false, sur);
  ASSERT_EQ(out.size(), 41u);
  for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(out[t].target, 0.0);
  EXPECT_EQ(out[40].target, 1.0);
  EXPECT_EQ(out[40].state[0], 40.0);
}

TEST(LabelRollout, SuccessfulSwitchIsPositive) {
  std::vector<StateVector> st(10, StateVector::Zero(2));
  std::vector<std::uint8_t> sw(10, 0);
  sw[9] = 1;
  auto out = label_rollout(st, sw, true, std::vector<std::uint8_t>(10, 0));
  EXPECT_EQ(out.back().target, 1.0);
  out = label_rollout(st, sw, false, std::vector<std::uint8_t>(10, 0));
  EXPECT_EQ(out.back().target, 0.0);
  std::vector<std::uint8_t> sur(10, 0);
  sur[9] = 1;
  out = label_rollout(st, sw, true, sur);
  EXPECT_EQ(out.back().target, 1.0);
  EXPECT_THROW(label_rollout(st, std::vector<std::uint8_t>(3, 0), true, sur), std::invalid_argument);
}

TEST(GoalProposal, LearnsAgentMeetsTool) {
  const RelationalNet net = train_synthetic(7, 2000);
  Rng rng(99);
  AgentMeetsTool gen;
  double pos = 0.0, neg = 0.0;
  for (int i = 0; i < 500; ++i) {
    pos += net.evaluate(gen.positive(rng));
    neg += net.evaluate(gen.negative(rng));
  }
  EXPECT_GT(pos / 500.0, 0.8);
  EXPECT_LT(neg / 500.0, 0.2);
}

TEST(GoalProposal, RelationMassOnAgentToolPairs) {
  const RelationalNet net = train_synthetic(8, 2000);
  const auto w = GoalProposal::weight_magnitudes(net);
  const Eigen::MatrixXd m = w[0].cwiseMin(w[1]);
  const double on = m(0, 2) + m(1, 3);
  EXPECT_GE(on / m.sum(), 0.7);
}

TEST(GoalProposal, NoPositivesLeavesParametersUnchanged) {
  GoalProposal gp(3, 6, GoalProposalConfig{}, 1);
  Rng rng(1);
  std::vector<LabeledSample> negatives;
  for (int i = 0; i < 100; ++i) negatives.push_back({random_state(6, rng), 0.0});
  gp.add(1, 0, negatives, rng);
  const Eigen::VectorXd before = gp.parameters();
  EXPECT_EQ(gp.train(rng), 0u);
  EXPECT_EQ(gp.parameters(), before);
  EXPECT_EQ(gp.positives(1, 0), 0u);
  EXPECT_THROW(gp.positives(1, 1), std::out_of_range);
}

TEST(GoalProposal, UntrainedProposalIsUniformInArena) {
  GoalProposal gp(3, 6, GoalProposalConfig{}, 1);
  Rng rng(2);
  const Eigen::VectorXd s = random_state(6, rng);
  double mean = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const Eigen::VectorXd g = gp.sample_goal(1, 0, s, {2, 3}, {0, 1}, 5.0, rng);
    ASSERT_LE(g.cwiseAbs().maxCoeff(), 5.0);
    mean += g[0];
  }
  EXPECT_NEAR(mean / 4000.0, 0.0, 0.15);
}

TEST(GoalProposal, FewPositivesDominateSampling) {
  const auto cfg = ArenaConfig::desk();
  GoalProposalConfig gcfg;
  gcfg.net = trained_config();
  GoalProposal gp(5, StateLayout{4}.dim(), gcfg, 3);
  AgentMeetsTool gen;
  Rng rng(3);
  std::vector<LabeledSample> batch;
  for (int i = 0; i < 10; ++i) batch.push_back({gen.positive(rng), 1.0});
  for (int i = 0; i < 2000; ++i) batch.push_back({gen.negative(rng), 0.0});
  gp.add(1, 0, batch, rng);
  EXPECT_EQ(gp.positives(1, 0), 10u);
  for (int call = 0; call < 20; ++call) gp.train(rng);
  int close = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd s = gen.negative(rng);
    const Eigen::VectorXd g = gp.sample_goal(1, 0, s, {2, 3}, {0, 1}, cfg.half_size, rng);
    close += (g - s.segment(2, 2)).squaredNorm() <= cfg.delta;
  }
  EXPECT_GE(close, 95);
}

TEST(OracleGoal, Examples) {
  const auto cfg = ArenaConfig::desk();
  const auto spaces = make_goal_spaces(cfg);
  const StateLayout lay{4};
  StateVector s = StateVector::Zero(static_cast<Eigen::Index>(lay.dim()));
  s[static_cast<Eigen::Index>(lay.object_pos(0))] = 3.0;
  s[static_cast<Eigen::Index>(lay.object_pos(0)) + 1] = 1.0;
  s[static_cast<Eigen::Index>(lay.object_pos(1))] = -2.0;
  s[static_cast<Eigen::Index>(lay.object_pos(1)) + 1] = 5.0;
  EXPECT_EQ(oracle_goal(spaces, 1, s), Eigen::Vector2d(3.0, 1.0));
  EXPECT_EQ(oracle_goal(spaces, 2, s), Eigen::Vector2d(-2.0, 5.0));
  EXPECT_EQ(oracle_goal(spaces, 2, s), oracle_goal(spaces, 2, s));
}
