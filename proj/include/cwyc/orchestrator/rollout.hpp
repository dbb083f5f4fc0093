#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/env/playground.hpp"
#include "cwyc/goal_proposal/goal_proposal.hpp"
#include "cwyc/orchestrator/agent.hpp"
#include "cwyc/task_graph/task_graph.hpp"

namespace cwyc {

enum class LegOutcome { Success, Timeout, Interrupted };

inline const char* to_string(LegOutcome o) {
  switch (o) {
    case LegOutcome::Success: return "success";
    case LegOutcome::Timeout: return "timeout";
    case LegOutcome::Interrupted: return "interrupted";
  }
  return "timeout";
}

/// One chain element as executed. Steps [start, end) ran under `task`; the
/// predecessor is the chain element planned before it (kStart for the first).
struct Leg {
  std::size_t task = 0;
  int predecessor = kStart;
  std::size_t start = 0;
  std::size_t end = 0;
  LegOutcome outcome = LegOutcome::Timeout;

  std::size_t steps() const { return end - start; }
};

struct SwitchEvent {
  std::size_t step = 0;  // index into RolloutRecord::states
  std::size_t from = 0;
  std::size_t to = 0;
  StateVector state;
};

struct RolloutRecord {
  std::uint64_t seed = 0;
  std::size_t final_task = 0;
  TaskChain chain;
  Eigen::VectorXd final_goal;
  std::vector<StateVector> states;  // T + 1
  std::vector<Action> actions;      // T
  std::vector<std::size_t> active;  // T, sub-task driving each step
  std::vector<Eigen::VectorXd> goals;
  std::vector<Leg> legs;
  std::vector<SwitchEvent> switches;
  bool final_success = false;
  // Filled by the training phase: errors[task][t], surprise[task][t].
  std::vector<std::vector<double>> errors;
  std::vector<std::vector<std::uint8_t>> surprise;
  std::string error;

  std::size_t steps() const { return actions.size(); }
};

struct EpisodeOptions {
  bool evaluation = false;  // deterministic actions, greedy chains
  std::optional<std::size_t> final_task;
};

namespace detail {
inline std::vector<std::size_t> pinned_after(const GoalSpaceSpec& spaces, const TaskChain& chain, std::size_t pos) {
  std::vector<std::size_t> pinned;
  for (std::size_t k = pos + 1; k < chain.size(); ++k)
    pinned.insert(pinned.end(), spaces[chain[k]].indices.begin(), spaces[chain[k]].indices.end());
  return pinned;
}
}  // namespace detail

/// One rollout of the hierarchical agent against a frozen snapshot.
inline RolloutRecord run_episode(const Agent& agent, std::uint64_t seed, const EpisodeOptions& opt = {}) {
  const auto& cfg = agent.cfg;
  const auto& spaces = agent.spaces;
  const std::size_t K = spaces.size();
  const double delta = cfg.arena.delta;
  const double h = cfg.arena.half_size;
  const bool explore = !opt.evaluation;

  RolloutRecord rec;
  rec.seed = seed;
  Rng rng(derive_seed(seed, {1}));
  Arena arena(cfg.arena);
  rec.states.push_back(arena.reset(derive_seed(seed, {0})));

  if (opt.final_task) {
    if (*opt.final_task >= K) throw std::out_of_range("run_episode: invalid final task");
    rec.final_task = *opt.final_task;
  } else {
    rec.final_task = cfg.uniform_tasks ? uniform_index(rng, K) : agent.bandit.sample(rng);
  }
  // goals that already hold in the initial state are redrawn
  for (int attempt = 0; attempt < 100; ++attempt) {
    rec.final_goal = goal_sample(cfg.arena, spaces, rec.final_task, rng);
    if (spaces.squared_distance(rec.states[0], rec.final_task, rec.final_goal) > delta) break;
  }
  rec.chain = agent.graph.plan(rec.final_task, rng, opt.evaluation ? std::optional<double>(0.0) : std::nullopt);

  const int t_max = cfg.arena.t_max;
  const std::size_t refresh = cfg.goal_proposal.refresh_every;
  const int budget = cfg.leg_budget > 0 ? cfg.leg_budget : std::max(1, t_max / static_cast<int>(rec.chain.size()));

  std::size_t pos = 0;
  std::size_t leg_start = 0;
  std::vector<std::size_t> pinned;
  Eigen::VectorXd goal;
  bool proposer_ready = false;

  auto start_leg = [&](std::size_t t) {
    leg_start = t;
    const std::size_t j = rec.chain[pos];
    if (pos + 1 == rec.chain.size()) {
      goal = rec.final_goal;
      return;
    }
    const std::size_t i = rec.chain[pos + 1];
    pinned = detail::pinned_after(spaces, rec.chain, pos);
    proposer_ready = cfg.oracle_goals || agent.goals.positives(i, j) > 0;
    goal = cfg.oracle_goals ? oracle_goal(spaces, i, rec.states.back())
                            : agent.goals.sample_goal(i, j, rec.states.back(), pinned, spaces[j].indices, h, rng);
  };
  auto close_leg = [&](std::size_t t, LegOutcome outcome) {
    const int predecessor = pos ? static_cast<int>(rec.chain[pos - 1]) : kStart;
    rec.legs.push_back({rec.chain[pos], predecessor, leg_start, t, outcome});
  };

  if (t_max > 0) start_leg(0);
  for (int step = 0; step < t_max; ++step) {
    const auto t = static_cast<std::size_t>(step);
    const bool last = pos + 1 == rec.chain.size();
    const std::size_t j = rec.chain[pos];
    if (!last && proposer_ready && t > leg_start && (t - leg_start) % refresh == 0) {
      const std::size_t i = rec.chain[pos + 1];
      goal = cfg.oracle_goals ? oracle_goal(spaces, i, rec.states.back())
                              : agent.goals.sample_goal(i, j, rec.states.back(), pinned, spaces[j].indices, h, rng);
    }
    const Action a = agent.policies[j]->act(rec.states.back(), goal, explore, rng);
    rec.actions.push_back(a);
    rec.active.push_back(j);
    rec.goals.push_back(goal);
    rec.states.push_back(arena.step(a));
    const StateVector& s = rec.states.back();

    if (spaces.squared_distance(s, rec.final_task, rec.final_goal) <= delta) {
      rec.final_success = true;
      close_leg(t + 1, last ? LegOutcome::Success : LegOutcome::Interrupted);
      break;
    }
    if (last) continue;
    if (spaces.squared_distance(s, j, goal) <= delta) {
      close_leg(t + 1, LegOutcome::Success);
      rec.switches.push_back({t + 1, j, rec.chain[pos + 1], s});
      ++pos;
      start_leg(t + 1);
    } else if (static_cast<int>(t + 1 - leg_start) >= budget) {
      close_leg(t + 1, LegOutcome::Timeout);
      ++pos;
      start_leg(t + 1);
    }
  }
  if (t_max > 0 && !rec.final_success) close_leg(rec.steps(), LegOutcome::Timeout);
  return rec;
}

/// Runs one rollout per seed on `workers` threads. Records come back in seed
/// order regardless of scheduling.
inline std::vector<RolloutRecord> run_rollouts(const Agent& agent, const std::vector<std::uint64_t>& seeds,
                                               std::size_t workers, const EpisodeOptions& opt = {},
                                               const std::vector<std::size_t>* final_tasks = nullptr) {
  std::vector<RolloutRecord> out(seeds.size());
  auto work = [&](std::size_t w, std::size_t stride) {
    for (std::size_t r = w; r < seeds.size(); r += stride) {
      EpisodeOptions o = opt;
      if (final_tasks) o.final_task = (*final_tasks)[r];
      try {
        out[r] = run_episode(agent, seeds[r], o);
      } catch (const std::exception& e) {
        out[r] = RolloutRecord{};
        out[r].seed = seeds[r];
        out[r].error = e.what();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(seeds.size(), 1));
  if (workers == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace cwyc
