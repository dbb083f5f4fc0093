#pragma once

// Success bookkeeping and the final-task selector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/env/playground.hpp"
#include "cwyc/numerics/rng.hpp"

namespace cwyc {

/// succ_i = max_t [ ||s_{m_i}(t) - g_i||^2 <= delta ] over the given states.
inline bool task_success(const std::vector<StateVector>& states, const GoalSpaceSpec& spaces, std::size_t task,
                         const Eigen::VectorXd& goal, double delta) {
  return std::any_of(states.begin(), states.end(),
                     [&](const StateVector& s) { return spaces.squared_distance(s, task, goal) <= delta; });
}

/// Running success rate over the last `window` attempts of each task and the
/// learning progress between consecutive attempts of the same task.
class TaskStats {
 public:
  TaskStats() = default;
  TaskStats(std::size_t num_tasks, std::size_t window = 10)
      : window_(window), history_(num_tasks), sr_(num_tasks, 0.0), rho_(num_tasks, 0.0), attempts_(num_tasks, 0) {
    if (window == 0) throw std::invalid_argument("TaskStats: window must be > 0");
  }

  void update(std::size_t task, bool success) {
    auto& h = history_.at(task);
    h.push_back(success ? 1 : 0);
    if (h.size() > window_) h.pop_front();
    const double sr_new = static_cast<double>(std::accumulate(h.begin(), h.end(), 0)) / static_cast<double>(h.size());
    rho_[task] = sr_new - sr_[task];
    sr_[task] = sr_new;
    ++attempts_[task];
  }

  std::size_t num_tasks() const { return sr_.size(); }
  std::size_t window() const { return window_; }
  double success_rate(std::size_t task) const { return sr_.at(task); }
  double progress(std::size_t task) const { return rho_.at(task); }
  std::uint64_t attempts(std::size_t task) const { return attempts_.at(task); }
  const std::deque<int>& history(std::size_t task) const { return history_.at(task); }

  /// Mean success rate over all tasks.
  double competence() const {
    if (sr_.empty()) return 0.0;
    return std::accumulate(sr_.begin(), sr_.end(), 0.0) / static_cast<double>(sr_.size());
  }

 private:
  std::size_t window_ = 10;
  std::vector<std::deque<int>> history_;
  std::vector<double> sr_;
  std::vector<double> rho_;
  std::vector<std::uint64_t> attempts_;
};

/// r^T_i = |rho_i| + beta^T * max_t surprise_i(t)
inline double bandit_reward(double progress, bool surprised, double surprise_weight) {
  return std::abs(progress) + (surprised ? surprise_weight : 0.0);
}

struct BanditConfig {
  double learning_rate = 0.1;
  double surprise_weight = 0.1;
  double epsilon = 0.05;
  double q_floor = 1e-6;
};

/// Non-stationary multi-armed bandit over final tasks with a proportional,
/// epsilon-mixed selection policy.
class Bandit {
 public:
  Bandit() = default;
  Bandit(std::size_t num_tasks, BanditConfig cfg) : cfg_(cfg), q_(num_tasks, 0.0) {
    if (num_tasks == 0) throw std::invalid_argument("Bandit: at least one task required");
  }

  /// Q(i) <- Q(i) + alpha (r - Q(i))
  void update(std::size_t task, double reward) {
    auto& q = q_.at(task);
    q += cfg_.learning_rate * (reward - q);
    q = std::max(q, 0.0);
  }

  std::vector<double> probabilities() const {
    const auto k = static_cast<double>(q_.size());
    std::vector<double> p(q_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) total += std::max(q_[i], cfg_.q_floor);
    for (std::size_t i = 0; i < q_.size(); ++i)
      p[i] = cfg_.epsilon / k + (1.0 - cfg_.epsilon) * std::max(q_[i], cfg_.q_floor) / total;
    return p;
  }

  std::size_t sample(Rng& rng) const {
    if (bernoulli(rng, cfg_.epsilon)) return uniform_index(rng, q_.size());
    double total = 0.0;
    for (double q : q_) total += std::max(q, cfg_.q_floor);
    double u = uniform(rng, 0.0, total);
    for (std::size_t i = 0; i < q_.size(); ++i) {
      u -= std::max(q_[i], cfg_.q_floor);
      if (u < 0.0) return i;
    }
    return q_.size() - 1;
  }

  std::size_t num_tasks() const { return q_.size(); }
  double value(std::size_t task) const { return q_.at(task); }
  const std::vector<double>& values() const { return q_; }
  const BanditConfig& config() const { return cfg_; }
  void set_value(std::size_t task, double q) { q_.at(task) = std::max(q, 0.0); }

 private:
  BanditConfig cfg_;
  std::vector<double> q_;
};

}  // namespace cwyc
