#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/control/actor_critic.hpp"
#include "cwyc/control/policy.hpp"
#include "cwyc/curriculum/curriculum.hpp"
#include "cwyc/env/playground.hpp"
#include "cwyc/goal_proposal/goal_proposal.hpp"
#include "cwyc/numerics/rng.hpp"
#include "cwyc/orchestrator/config.hpp"
#include "cwyc/task_graph/task_graph.hpp"
#include "cwyc/world_model/forward_model.hpp"
#include "cwyc/world_model/surprise.hpp"

namespace cwyc {

/// Hand-specified predecessors: locomotion follows the start state, the heavy
/// object follows the tool, everything else follows locomotion.
inline std::vector<int> oracle_predecessors(const ArenaConfig& arena) {
  std::vector<int> pred{kStart};
  int tool = -1;
  for (std::size_t i = 0; i < arena.objects.size(); ++i)
    if (arena.objects[i].kind == ObjectKind::Tool) tool = static_cast<int>(i) + 1;
  for (const auto& o : arena.objects) pred.push_back(o.kind == ObjectKind::Heavy && tool >= 0 ? tool : 0);
  return pred;
}

/// All learned state of one agent. Rollout workers only read it; the training
/// phase is the only writer.
struct Agent {
  ExperimentConfig cfg;
  StateLayout layout;
  GoalSpaceSpec spaces;
  ForwardModel forward_model;
  SurpriseDetector surprise;
  TaskStats stats;
  Bandit bandit;
  TaskGraph graph;
  GoalProposal goals;
  std::vector<std::unique_ptr<Policy>> policies;
  Rng rng;
  std::uint64_t env_steps = 0;
  double fm_loss = 0.0;

  std::size_t num_tasks() const { return spaces.size(); }
};

inline Eigen::VectorXd forward_model_input_scale(const ArenaConfig& arena) {
  const StateLayout lay{arena.objects.size()};
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(lay.dim() + 2));
  for (std::size_t i = 0; i < lay.flag(0); ++i) scale[static_cast<Eigen::Index>(i)] = 1.0 / arena.half_size;
  scale.tail(2).setConstant(1.0 / arena.max_force);
  return scale;
}

inline std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg) {
  cfg.validate();
  auto a = std::make_unique<Agent>();
  a->cfg = cfg;
  a->layout = StateLayout{cfg.arena.objects.size()};
  a->spaces = make_goal_spaces(cfg.arena);
  const std::size_t K = a->spaces.size();
  const std::size_t n = a->layout.dim();
  Rng init(derive_seed(cfg.seed, {0x1417ULL}));
  a->forward_model = ForwardModel(n, 2, cfg.forward_model, init, forward_model_input_scale(cfg.arena));
  a->surprise = SurpriseDetector(K, cfg.surprise);
  a->stats = TaskStats(K, cfg.success_window);
  a->bandit = Bandit(K, cfg.bandit);
  TaskGraphConfig tg = cfg.task_graph;
  tg.t_max = cfg.arena.t_max;
  a->graph = cfg.oracle_graph ? TaskGraph::oracle(K, oracle_predecessors(cfg.arena), tg) : TaskGraph(K, tg);
  a->goals = GoalProposal(K, n, cfg.goal_proposal, derive_seed(cfg.seed, {0x9e7ULL}));
  for (std::size_t k = 0; k < K; ++k) {
    if (cfg.pd_oracle) {
      a->policies.push_back(std::make_unique<PdPolicy>(a->layout, a->spaces[k], cfg.arena.max_force, cfg.pd));
    } else {
      Rng prng(derive_seed(cfg.seed, {0x5acULL, k}));
      a->policies.push_back(
          std::make_unique<SacPolicy>(n, a->spaces[k].indices, cfg.arena.max_force, cfg.arena.delta, cfg.policy, prng));
    }
  }
  a->rng.seed(derive_seed(cfg.seed, {0x7a1bULL}));
  return a;
}

namespace detail {
inline void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}
inline void fnv_mix(std::uint64_t& h, const Eigen::VectorXd& v) {
  fnv_mix(h, v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}
}  // namespace detail

/// FNV-1a digest of every learned quantity.
inline std::uint64_t snapshot_hash(const Agent& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  detail::fnv_mix(h, a.forward_model.net().params());
  for (const auto& p : a.policies) detail::fnv_mix(h, p->parameters());
  detail::fnv_mix(h, a.goals.parameters());
  const auto& q = a.bandit.values();
  detail::fnv_mix(h, q.data(), q.size() * sizeof(double));
  const Eigen::MatrixXd b = a.graph.matrix();
  detail::fnv_mix(h, b.data(), static_cast<std::size_t>(b.size()) * sizeof(double));
  for (std::size_t k = 0; k < a.stats.num_tasks(); ++k) {
    const double sr = a.stats.success_rate(k);
    detail::fnv_mix(h, &sr, sizeof sr);
  }
  return h;
}

/// True when the greedy predecessors of locomotion, tool and heavy tasks are
/// the start state, locomotion and the tool respectively.
inline bool graph_recovered(const TaskGraph& graph, const ArenaConfig& arena) {
  const auto expected = oracle_predecessors(arena);
  bool any = false;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const bool checked = k == 0 || arena.objects[k - 1].kind == ObjectKind::Tool || arena.objects[k - 1].kind == ObjectKind::Heavy;
    if (!checked) continue;
    any = true;
    if (graph.greedy_predecessor(k) != expected[k]) return false;
  }
  return any;
}

}  // namespace cwyc
