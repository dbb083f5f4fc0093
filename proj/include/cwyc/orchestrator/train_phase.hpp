#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "cwyc/control/policy.hpp"
#include "cwyc/curriculum/curriculum.hpp"
#include "cwyc/goal_proposal/goal_proposal.hpp"
#include "cwyc/orchestrator/agent.hpp"
#include "cwyc/orchestrator/rollout.hpp"
#include "cwyc/world_model/forward_model.hpp"
#include "cwyc/world_model/surprise.hpp"

namespace cwyc {

inline TransitionBatch transitions(const RolloutRecord& rec) {
  TransitionBatch b;
  const auto T = static_cast<Eigen::Index>(rec.steps());
  const auto n = T ? rec.states[0].size() : 0;
  b.states.resize(n, T);
  b.next_states.resize(n, T);
  b.actions.resize(2, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    b.states.col(t) = rec.states[static_cast<std::size_t>(t)];
    b.next_states.col(t) = rec.states[static_cast<std::size_t>(t) + 1];
    b.actions.col(t) = rec.actions[static_cast<std::size_t>(t)];
  }
  return b;
}

/// Surprise of `task` anywhere in steps [start, end).
inline bool surprised_in(const RolloutRecord& rec, std::size_t task, std::size_t start, std::size_t end) {
  const auto& f = rec.surprise.at(task);
  for (std::size_t t = start; t < std::min(end, f.size()); ++t)
    if (f[t]) return true;
  return false;
}

/// Training samples for transition (i <- j) from leg `l` of task j: the leg's
/// states with surprise_i targets, plus the switch state when the leg handed
/// over to task i.
inline std::vector<LabeledSample> leg_samples(const RolloutRecord& rec, std::size_t l, std::size_t i) {
  const Leg& leg = rec.legs[l];
  const bool switched = leg.outcome == LegOutcome::Success && l + 1 < rec.legs.size() && rec.legs[l + 1].task == i;
  const bool succ_i = switched && rec.legs[l + 1].outcome == LegOutcome::Success;
  std::vector<StateVector> states(rec.states.begin() + static_cast<std::ptrdiff_t>(leg.start),
                                  rec.states.begin() + static_cast<std::ptrdiff_t>(leg.end));
  std::vector<std::uint8_t> sw(states.size(), 0);
  std::vector<std::uint8_t> sur(rec.surprise.at(i).begin() + static_cast<std::ptrdiff_t>(leg.start),
                                rec.surprise.at(i).begin() + static_cast<std::ptrdiff_t>(leg.end));
  if (switched) {
    states.push_back(rec.states[leg.end]);
    sw.push_back(1);
    sur.push_back(0);
  }
  return label_rollout(states, sw, succ_i, sur);
}

/// Synchronized learning step over one batch of rollouts: forward model,
/// surprise, curriculum, task graph, goal proposal, then policies.
inline void train_phase(Agent& a, std::vector<RolloutRecord>& records) {
  const auto& cfg = a.cfg;
  const std::size_t K = a.num_tasks();
  std::vector<RolloutRecord*> recs;
  for (auto& r : records)
    if (r.error.empty()) recs.push_back(&r);

  for (auto* r : recs)
    if (r->steps()) a.forward_model.add(transitions(*r));
  a.fm_loss = a.forward_model.train(cfg.forward_model.train_iterations, a.rng);

  for (auto* r : recs) {
    r->errors = trajectory_errors(a.forward_model, r->states, r->actions, a.spaces);
    if (cfg.no_surprise) {
      r->surprise.assign(K, std::vector<std::uint8_t>(r->steps(), 0));
    } else {
      r->surprise = a.surprise.process(r->errors);
    }
  }

  for (auto* r : recs) {
    a.stats.update(r->final_task, r->final_success);
    const bool surprised = any_flag(r->surprise[r->final_task]);
    a.bandit.update(r->final_task, bandit_reward(a.stats.progress(r->final_task), surprised, cfg.bandit.surprise_weight));
  }

  for (auto* r : recs) {
    for (std::size_t l = 0; l < r->legs.size(); ++l) {
      const Leg& leg = r->legs[l];
      if (leg.outcome == LegOutcome::Interrupted) continue;
      const std::size_t from = l ? r->legs[l - 1].start : leg.start;
      const int runtime = leg.outcome == LegOutcome::Success ? static_cast<int>(leg.end - from) : cfg.arena.t_max;
      a.graph.update(leg.task, leg.predecessor, runtime, surprised_in(*r, leg.task, from, leg.end));
      // every other task: was it surprising while this leg ran?
      const bool handed_over = leg.outcome == LegOutcome::Success && l + 1 < r->legs.size();
      for (std::size_t i = 0; i < K; ++i) {
        if (i == leg.task || (handed_over && r->legs[l + 1].task == i)) continue;
        a.graph.observe_surprise(i, static_cast<int>(leg.task), surprised_in(*r, i, leg.start, leg.end));
      }
    }
  }

  if (!cfg.oracle_goals) {
    for (auto* r : recs)
      for (std::size_t l = 0; l < r->legs.size(); ++l)
        for (std::size_t i = 0; i < K; ++i)
          if (i != r->legs[l].task) a.goals.add(i, r->legs[l].task, leg_samples(*r, l, i), a.rng);
    a.goals.train(a.rng);
  }

  std::vector<bool> fresh(K, false);
  for (auto* r : recs)
    for (const auto& leg : r->legs) {
      if (leg.steps() == 0) continue;
      PolicyEpisode ep;
      ep.states.assign(r->states.begin() + static_cast<std::ptrdiff_t>(leg.start),
                       r->states.begin() + static_cast<std::ptrdiff_t>(leg.end) + 1);
      ep.actions.assign(r->actions.begin() + static_cast<std::ptrdiff_t>(leg.start),
                        r->actions.begin() + static_cast<std::ptrdiff_t>(leg.end));
      ep.goals.assign(r->goals.begin() + static_cast<std::ptrdiff_t>(leg.start),
                      r->goals.begin() + static_cast<std::ptrdiff_t>(leg.end));
      a.policies[leg.task]->observe(ep, a.rng);
      fresh[leg.task] = true;
    }
  for (std::size_t k = 0; k < K; ++k)
    if (fresh[k] && a.policies[k]->learns()) a.policies[k]->train(cfg.policy.train_iterations, a.rng);

  for (auto* r : recs) a.env_steps += r->steps();
}

}  // namespace cwyc
