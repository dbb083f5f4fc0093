#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cwyc/cwyc.hpp"

using namespace cwyc;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kLoc = 0, kTool = 1, kHeavy = 2;

ExperimentConfig oracle_config() {
  ExperimentConfig c = desk_profile();
  c.oracle_graph = c.oracle_goals = c.pd_oracle = true;
  c.workers = 1;
  return c;
}

ExperimentConfig small_learned_config() {
  ExperimentConfig c = desk_profile();
  c.forward_model.layer_size = 16;
  c.forward_model.num_layers = 1;
  c.forward_model.train_iterations = 10;
  c.policy.hidden = {16};
  c.policy.train_iterations = 10;
  c.goal_proposal.net.train_iterations = 10;
  c.arena.t_max = 60;
  c.epochs = 3;
  c.eval_every = 2;
  c.eval_rollouts_per_task = 2;
  c.dump_every = 0;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cwyc_test_" + name);
  fs::remove_all(p);
  return p;
}

// Agent-only trajectory driven by PD towards `targets` in turn, objects parked
// in the corners unless the state was prepared otherwise.
RolloutRecord scripted_record(const ExperimentConfig& cfg, const StateVector& start, const std::vector<Eigen::Vector2d>& targets,
                              int steps_per_target) {
  const auto spaces = make_goal_spaces(cfg.arena);
  Arena arena(cfg.arena);
  arena.reset(0);
  arena.set_state(start);
  RolloutRecord rec;
  rec.final_task = kLoc;
  rec.chain = {kLoc};
  rec.final_goal = Eigen::Vector2d(100.0, 100.0);
  rec.states.push_back(arena.state());
  for (const auto& g : targets)
    for (int t = 0; t < steps_per_target; ++t) {
      const Action a = pd_oracle_act(arena.layout(), spaces[kLoc], arena.state(), g, cfg.arena.max_force);
      rec.actions.push_back(a);
      rec.active.push_back(kLoc);
      rec.goals.push_back(g);
      rec.states.push_back(arena.step(a));
    }
  rec.legs.push_back({kLoc, kStart, 0, rec.steps(), LegOutcome::Timeout});
  return rec;
}

StateVector parked_state(const StateLayout& lay) {
  StateVector s = StateVector::Zero(static_cast<Eigen::Index>(lay.dim()));
  const double corners[4][2] = {{4.5, 4.5}, {-4.5, 4.5}, {4.5, -4.5}, {-4.5, -4.5}};
  for (std::size_t i = 0; i < 4; ++i) {
    s[static_cast<Eigen::Index>(lay.object_pos(i))] = corners[i][0];
    s[static_cast<Eigen::Index>(lay.object_pos(i)) + 1] = corners[i][1];
  }
  return s;
}

}  // namespace

TEST(Rollout, LocomotionChainWithPdSucceeds) {
  auto agent = make_agent(oracle_config());
  EpisodeOptions opt;
  opt.final_task = kLoc;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rec = run_episode(*agent, seed, opt);
    EXPECT_EQ(rec.chain, (TaskChain{kLoc}));
    EXPECT_TRUE(rec.final_success);
    EXPECT_LT(rec.steps(), static_cast<std::size_t>(agent->cfg.arena.t_max));
    EXPECT_EQ(rec.states.size(), rec.steps() + 1);
  }
}

TEST(Rollout, ZeroHorizonGivesEmptyTrajectory) {
  ExperimentConfig cfg = oracle_config();
  cfg.arena.t_max = 0;
  auto agent = make_agent(cfg);
  const auto rec = run_episode(*agent, 1);
  EXPECT_EQ(rec.steps(), 0u);
  EXPECT_EQ(rec.states.size(), 1u);
  EXPECT_FALSE(rec.final_success);
  EXPECT_TRUE(rec.legs.empty());
}

TEST(Rollout, FinalGoalIsNotAlreadyMet) {
  auto agent = make_agent(oracle_config());
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto rec = run_episode(*agent, seed);
    ASSERT_GT(agent->spaces.squared_distance(rec.states[0], rec.final_task, rec.final_goal), agent->cfg.arena.delta);
  }
}

TEST(Rollout, FullOracleHeavySwitchOrder) {
  auto agent = make_agent(oracle_config());
  EpisodeOptions opt;
  opt.final_task = kHeavy;
  int successes = 0;
  const int n = 200;
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(n); ++seed) {
    const auto rec = run_episode(*agent, seed, opt);
    ASSERT_EQ(rec.chain, (TaskChain{kLoc, kTool, kHeavy}));
    successes += rec.final_success;
    if (rec.switches.size() >= 1) {
      EXPECT_EQ(rec.switches[0].from, kLoc);
      EXPECT_EQ(rec.switches[0].to, kTool);
    }
    if (rec.switches.size() >= 2) {
      EXPECT_EQ(rec.switches[1].from, kTool);
      EXPECT_EQ(rec.switches[1].to, kHeavy);
    }
  }
  EXPECT_GE(successes, static_cast<int>(0.95 * n));
}

TEST(Rollout, SwitchStatesAreLiveStates) {
  auto agent = make_agent(oracle_config());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rec = run_episode(*agent, seed);
    for (const auto& sw : rec.switches) {
      ASSERT_LT(sw.step, rec.states.size());
      ASSERT_EQ(sw.state, rec.states[sw.step]);
    }
    for (std::size_t l = 1; l < rec.legs.size(); ++l) ASSERT_EQ(rec.legs[l].start, rec.legs[l - 1].end);
  }
}

TEST(Rollout, LegPredecessorIsPlannedElement) {
  ExperimentConfig cfg = oracle_config();
  cfg.leg_budget = 3;
  auto agent = make_agent(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rec = run_episode(*agent, seed);
    ASSERT_FALSE(rec.legs.empty());
    EXPECT_EQ(rec.legs[0].predecessor, kStart);
    for (std::size_t l = 1; l < rec.legs.size(); ++l)
      EXPECT_EQ(rec.legs[l].predecessor, static_cast<int>(rec.chain[l - 1]));
  }
}

TEST(Rollout, GoalsKeepLaterChainCoordinates) {
  // gnet proposals never move coordinates that belong to later chain elements
  ExperimentConfig cfg = oracle_config();
  cfg.oracle_goals = false;
  auto agent = make_agent(cfg);
  RelationalNetConfig nc;
  nc.init_scale = 1.0;
  auto& e = agent->goals.entry(kTool, kLoc);
  Rng rng(1);
  e.net = RelationalNet::random(agent->layout.dim(), nc, rng);
  e.positives.add({StateVector::Zero(static_cast<Eigen::Index>(agent->layout.dim())), 1.0}, rng);
  const StateVector s = agent->layout.dim() ? parked_state(agent->layout) : StateVector{};
  const auto pinned = detail::pinned_after(agent->spaces, {kLoc, kTool}, 0);
  EXPECT_EQ(pinned, (std::vector<std::size_t>{2, 3}));
  const Eigen::VectorXd full = e.net.argmax(s, pinned);
  EXPECT_EQ(full[2], s[2]);
  EXPECT_EQ(full[3], s[3]);
}

TEST(Rollout, WorkersReturnRecordsInSeedOrder) {
  auto agent = make_agent(small_learned_config());
  const std::vector<std::uint64_t> seeds{11, 12, 13, 14, 15};
  const auto one = run_rollouts(*agent, seeds, 1);
  const auto three = run_rollouts(*agent, seeds, 3);
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    EXPECT_EQ(one[r].seed, seeds[r]);
    EXPECT_EQ(one[r].states, three[r].states);
    EXPECT_EQ(one[r].actions, three[r].actions);
  }
}

TEST(Rollout, RolloutPhaseLeavesSnapshotUntouched) {
  auto agent = make_agent(small_learned_config());
  const auto h = snapshot_hash(*agent);
  run_rollouts(*agent, {1, 2, 3, 4}, 2);
  EXPECT_EQ(snapshot_hash(*agent), h);
  auto records = run_rollouts(*agent, {5, 6}, 1);
  train_phase(*agent, records);
  EXPECT_NE(snapshot_hash(*agent), h);
}

TEST(TrainPhase, BanditDecaysWithoutReward) {
  ExperimentConfig cfg = small_learned_config();
  cfg.arena.t_max = 400;
  auto agent = make_agent(cfg);
  agent->bandit.set_value(kLoc, 0.5);
  const StateVector s = parked_state(agent->layout);
  for (int epoch = 0; epoch < 30; ++epoch) {
    std::vector<RolloutRecord> recs{scripted_record(cfg, s, {Eigen::Vector2d::Zero()}, 50)};
    train_phase(*agent, recs);
    ASSERT_FALSE(any_flag(recs[0].surprise[kLoc]));
  }
  EXPECT_NEAR(agent->bandit.value(kLoc), 0.5 * std::pow(0.9, 30), 1e-12);
}

TEST(TrainPhase, ToolCollisionGrowsOnlyToolPool) {
  ExperimentConfig cfg = small_learned_config();
  cfg.arena.t_max = 400;
  cfg.arena.random_walk_sigma = 0.0;
  cfg.forward_model.train_iterations = 0;
  cfg.surprise.warmup = 100;
  auto agent = make_agent(cfg);
  // The model predicts objects at rest exactly, so their errors only move
  // when an object does.
  Mlp& fm = agent->forward_model.net();
  const std::size_t last = fm.num_layers() - 1;
  for (std::size_t i = 0; i < 4; ++i)
    for (Eigen::Index k = 0; k < 2; ++k) {
      const auto row = static_cast<Eigen::Index>(agent->layout.object_pos(i)) + k;
      fm.weight(last).row(row).setZero();
      fm.bias(last)[row] = 0.0;
    }
  const StateVector parked = parked_state(agent->layout);
  Rng rng(3);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::vector<Eigen::Vector2d> targets;
    for (int k = 0; k < 4; ++k) targets.emplace_back(uniform(rng, -2.5, 2.5), uniform(rng, -2.5, 2.5));
    std::vector<RolloutRecord> recs{scripted_record(cfg, parked, targets, 25)};
    train_phase(*agent, recs);
  }
  for (std::size_t i = 1; i < 5; ++i) ASSERT_EQ(agent->goals.positives(i, kLoc), 0u);

  std::vector<RolloutRecord> recs{scripted_record(cfg, parked, {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(4.5, 4.5)}, 50)};
  train_phase(*agent, recs);
  EXPECT_TRUE(any_flag(recs[0].surprise[kTool]));
  EXPECT_GT(agent->goals.positives(kTool, kLoc), 0u);
  for (std::size_t i = 2; i < 5; ++i) EXPECT_EQ(agent->goals.positives(i, kLoc), 0u) << "task " << i;
}

TEST(TrainPhase, NoSurpriseZeroesFlagsOnly) {
  ExperimentConfig a_cfg = small_learned_config();
  a_cfg.surprise.warmup = 0;
  ExperimentConfig b_cfg = a_cfg;
  b_cfg.no_surprise = true;
  auto a = make_agent(a_cfg);
  auto b = make_agent(b_cfg);
  auto ra = run_rollouts(*a, {1, 2, 3}, 1);
  auto rb = ra;
  train_phase(*a, ra);
  train_phase(*b, rb);
  bool any = false;
  for (const auto& r : ra)
    for (const auto& f : r.surprise) any = any || any_flag(f);
  EXPECT_TRUE(any);
  for (const auto& r : rb)
    for (const auto& f : r.surprise) EXPECT_FALSE(any_flag(f));
  EXPECT_EQ(a->forward_model.net().params(), b->forward_model.net().params());
  for (std::size_t k = 0; k < a->num_tasks(); ++k) EXPECT_EQ(a->stats.success_rate(k), b->stats.success_rate(k));
  for (std::size_t r = 0; r < ra.size(); ++r) EXPECT_EQ(ra[r].errors, rb[r].errors);
}

TEST(Experiment, WritesMetricsWithHeaderContract) {
  ExperimentConfig cfg = oracle_config();
  cfg.epochs = 1;
  cfg.workers = 1;
  cfg.eval_every = 1;
  cfg.eval_rollouts_per_task = 1;
  cfg.dump_every = 1;
  cfg.write_rollouts = true;
  const auto dir = temp_dir("header");
  run_experiment(cfg, dir);
  for (const char* f : {"metrics.csv", "eval.csv", "config_resolved.json", "rollouts.jsonl", "B_epoch_0.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "metrics.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "epoch,env_steps,competence,sr_locomotion,sr_tool,sr_heavy,sr_half_light,sr_random,"
            "rho_locomotion,rho_tool,rho_heavy,rho_half_light,rho_random,q_locomotion,q_tool,q_heavy,"
            "q_half_light,q_random,sel_locomotion,sel_tool,sel_heavy,sel_half_light,sel_random,graph_recovered,fm_loss");
  std::ifstream ev(dir / "eval.csv");
  std::getline(ev, header);
  EXPECT_EQ(header, "epoch,env_steps,competence,eval_locomotion,eval_tool,eval_heavy,eval_half_light,eval_random");
  const auto j = nlohmann::json::parse(slurp(dir / "config_resolved.json"));
  EXPECT_EQ(config_from_json(j).pd_oracle, true);
  fs::remove_all(dir);
}

TEST(Experiment, SameSeedSameMetrics) {
  const auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
  run_experiment(small_learned_config(), d1);
  run_experiment(small_learned_config(), d2);
  EXPECT_EQ(slurp(d1 / "metrics.csv"), slurp(d2 / "metrics.csv"));
  EXPECT_EQ(slurp(d1 / "eval.csv"), slurp(d2 / "eval.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  ExperimentConfig one = small_learned_config();
  one.workers = 1;
  ExperimentConfig four = one;
  four.workers = 4;
  const auto d1 = temp_dir("w1"), d4 = temp_dir("w4");
  run_experiment(one, d1);
  run_experiment(four, d4);
  EXPECT_EQ(slurp(d1 / "metrics.csv"), slurp(d4 / "metrics.csv"));
  fs::remove_all(d1);
  fs::remove_all(d4);
}

TEST(Experiment, StepBudgetStopsTraining) {
  ExperimentConfig cfg = small_learned_config();
  cfg.epochs = 100;
  cfg.max_env_steps = 500;
  const auto res = run_experiment(cfg);
  EXPECT_GE(res.agent->env_steps, 500u);
  EXPECT_LT(res.metrics.size(), 100u);
}

TEST(Experiment, RecoveredEpochNeedsPersistence) {
  ExperimentResult r;
  for (std::size_t e = 0; e < 6; ++e) {
    MetricsRow m;
    m.epoch = e;
    m.graph_recovered = e == 1 || e >= 3;
    r.metrics.push_back(m);
  }
  EXPECT_EQ(r.graph_recovered_epoch(), 3u);
  r.metrics.back().graph_recovered = false;
  EXPECT_FALSE(r.graph_recovered_epoch());
}

TEST(Agent, OracleGraphCountsAsRecovered) {
  auto agent = make_agent(oracle_config());
  EXPECT_TRUE(graph_recovered(agent->graph, agent->cfg.arena));
  auto learned = make_agent(small_learned_config());
  EXPECT_FALSE(graph_recovered(learned->graph, learned->cfg.arena));
  EXPECT_EQ(oracle_predecessors(ArenaConfig::desk()), (std::vector<int>{kStart, 0, 1, 0, 0}));
}

TEST(Config, JsonRoundTrip) {
  for (const auto& name : {"desk", "paper"}) {
    const ExperimentConfig c = profile_config(name);
    EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c)) << name;
  }
  EXPECT_THROW(profile_config("huge"), std::invalid_argument);
}

TEST(Config, MergeRejectsUnknownKeys) {
  const ExperimentConfig base = desk_profile();
  const auto merged = merge_config(base, nlohmann::json::parse(R"({"seed": 7, "policy": {"her": true}})"));
  EXPECT_EQ(merged.seed, 7u);
  EXPECT_TRUE(merged.policy.her);
  EXPECT_EQ(merged.policy.hidden, base.policy.hidden);
  EXPECT_THROW(merge_config(base, nlohmann::json::parse(R"({"sed": 7})")), std::invalid_argument);
  EXPECT_THROW(merge_config(base, nlohmann::json::parse(R"({"policy": {"hidden_size": 3}})")), std::invalid_argument);
}

TEST(Config, InvalidValuesRejected) {
  ExperimentConfig c = desk_profile();
  c.workers = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = desk_profile();
  c.arena.delta = 0.0;
  EXPECT_THROW(make_agent(c), std::invalid_argument);
}
