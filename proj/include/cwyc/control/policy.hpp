#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/env/playground.hpp"
#include "cwyc/numerics/rng.hpp"

namespace cwyc {

/// r_i(t) = -||s_{m_i}(t) - g_i||^2
inline double task_reward(const StateVector& s, const std::vector<std::size_t>& indices, const Eigen::VectorXd& goal) {
  if (static_cast<std::size_t>(goal.size()) != indices.size()) throw std::invalid_argument("task_reward: goal dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double d = s[static_cast<Eigen::Index>(indices[k])] - goal[static_cast<Eigen::Index>(k)];
    acc += d * d;
  }
  return -acc;
}

/// One contiguous stretch of experience under a single task and policy:
/// states.size() == actions.size() + 1, goals[t] was active for actions[t].
struct PolicyEpisode {
  std::vector<StateVector> states;
  std::vector<Action> actions;
  std::vector<Eigen::VectorXd> goals;

  std::size_t size() const { return actions.size(); }
};

struct PolicyDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  std::size_t iterations = 0;
};

/// Goal-conditioned low-level controller of one task.
class Policy {
 public:
  virtual ~Policy() = default;

  /// Action within the force bounds. Deterministic when `explore` is false.
  virtual Action act(const StateVector& s, const Eigen::VectorXd& goal, bool explore, Rng& rng) const = 0;
  virtual void observe(const PolicyEpisode& episode, Rng& rng) = 0;
  virtual PolicyDiagnostics train(std::size_t iterations, Rng& rng) = 0;
  virtual bool learns() const = 0;
  /// Flat view of all learned parameters (empty for scripted controllers).
  virtual Eigen::VectorXd parameters() const = 0;
};

struct PdConfig {
  double kp = 4.0;
  double kd = 1.0;
};

/// Scripted go-fetch controller: drive the agent to the goal when the task's
/// object is the agent or already possessed, otherwise to the object.
inline Action pd_oracle_act(const StateLayout& layout, const GoalSpace& task, const StateVector& s,
                            const Eigen::VectorXd& goal, double max_force, const PdConfig& pd = {}) {
  Eigen::Vector2d target;
  const bool carrying = task.object < 0 || s[static_cast<Eigen::Index>(layout.flag(static_cast<std::size_t>(task.object)))] > 0.5;
  if (carrying) {
    target = goal.head<2>();
  } else {
    const auto p = static_cast<Eigen::Index>(layout.object_pos(static_cast<std::size_t>(task.object)));
    target = Eigen::Vector2d(s[p], s[p + 1]);
  }
  const auto v = static_cast<Eigen::Index>(layout.velocity());
  Action a = pd.kp * (target - s.head<2>()) - pd.kd * Eigen::Vector2d(s[v], s[v + 1]);
  a = a.cwiseMax(-max_force).cwiseMin(max_force);
  return a;
}

class PdPolicy final : public Policy {
 public:
  PdPolicy(StateLayout layout, GoalSpace task, double max_force, PdConfig pd = {})
      : layout_(layout), task_(std::move(task)), max_force_(max_force), pd_(pd) {}

  Action act(const StateVector& s, const Eigen::VectorXd& goal, bool, Rng&) const override {
    return pd_oracle_act(layout_, task_, s, goal, max_force_, pd_);
  }
  void observe(const PolicyEpisode&, Rng&) override {}
  PolicyDiagnostics train(std::size_t, Rng&) override { return {}; }
  bool learns() const override { return false; }
  Eigen::VectorXd parameters() const override { return {}; }

 private:
  StateLayout layout_;
  GoalSpace task_;
  double max_force_;
  PdConfig pd_;
};

}  // namespace cwyc
