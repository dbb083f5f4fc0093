#pragma once

// Predecessor-value matrix and backward chain planning.
//
// Rows are tasks i = 0..K-1, columns are predecessors: column 0 is the start
// state S, column j+1 is task j.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/numerics/rng.hpp"

namespace cwyc {

inline constexpr int kStart = -1;  // predecessor id of the start state

inline std::size_t predecessor_column(int predecessor) { return static_cast<std::size_t>(predecessor + 1); }

struct TaskGraphConfig {
  double surprise_weight = 1e-3;   // beta^B
  std::size_t window = 100;        // running-average window of the success term
  double surprise_history = 0.99;  // exponential weighting of the surprise term
  double epsilon = 0.05;
  int t_max = 400;
};

using TaskChain = std::vector<std::size_t>;

class TaskGraph {
 public:
  TaskGraph() = default;
  TaskGraph(std::size_t num_tasks, TaskGraphConfig cfg)
      : cfg_(cfg),
        k_(num_tasks),
        windows_(num_tasks * (num_tasks + 1)),
        surprise_(num_tasks * (num_tasks + 1), 0.0) {
    if (num_tasks == 0) throw std::invalid_argument("TaskGraph: at least one task required");
    if (cfg.window == 0) throw std::invalid_argument("TaskGraph: window must be > 0");
  }

  /// Fixed graph whose rows are one-hot on the given predecessor (kStart or
  /// a task index). Updates are ignored.
  static TaskGraph oracle(std::size_t num_tasks, const std::vector<int>& predecessors, TaskGraphConfig cfg) {
    if (predecessors.size() != num_tasks) throw std::invalid_argument("oracle graph: one predecessor per task");
    TaskGraph g(num_tasks, cfg);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_tasks), static_cast<Eigen::Index>(num_tasks + 1));
    for (std::size_t i = 0; i < num_tasks; ++i) {
      const int p = predecessors[i];
      if (p < kStart || p >= static_cast<int>(num_tasks) || p == static_cast<int>(i))
        throw std::invalid_argument("oracle graph: invalid predecessor");
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(predecessor_column(p))) = 1.0;
    }
    g.fixed_ = std::move(b);
    return g;
  }

  bool is_fixed() const { return fixed_.has_value(); }
  std::size_t num_tasks() const { return k_; }
  const TaskGraphConfig& config() const { return cfg_; }

  /// Adds one outcome for "task i executed after predecessor j".
  /// `runtime` counts the steps from the start of the predecessor to the
  /// success of task i, or is t_max on failure.
  void update(std::size_t task, int predecessor, int runtime, bool surprised) {
    if (fixed_) return;
    if (task >= k_ || predecessor < kStart || predecessor >= static_cast<int>(k_))
      throw std::out_of_range("TaskGraph::update: invalid entry");
    const std::size_t e = entry(task, predecessor_column(predecessor));
    const double rt = std::clamp(static_cast<double>(runtime), 0.0, static_cast<double>(cfg_.t_max));
    const double sample = cfg_.t_max > 0 ? 1.0 - rt / cfg_.t_max : 0.0;
    auto& w = windows_[e];
    w.push_back(sample);
    if (w.size() > cfg_.window) w.pop_front();
    observe_surprise(task, predecessor, surprised);
  }

  /// Surprise-only observation: task i was not run after the predecessor,
  /// but its coordinates were (or were not) surprising while it ran.
  void observe_surprise(std::size_t task, int predecessor, bool surprised) {
    if (fixed_) return;
    if (task >= k_ || predecessor < kStart || predecessor >= static_cast<int>(k_))
      throw std::out_of_range("TaskGraph::observe_surprise: invalid entry");
    auto& x = surprise_[entry(task, predecessor_column(predecessor))];
    x = cfg_.surprise_history * x + (1.0 - cfg_.surprise_history) * (surprised ? 1.0 : 0.0);
  }

  double surprise_term(std::size_t task, std::size_t column) const { return surprise_.at(entry(task, column)); }

  /// Windowed mean of 1 - T/T_max for entry (i, column).
  double success_term(std::size_t task, std::size_t column) const {
    const auto& w = windows_.at(entry(task, column));
    if (w.empty()) return 0.0;
    double s = 0.0;
    for (double x : w) s += x;
    return s / static_cast<double>(w.size());
  }

  const std::deque<double>& window(std::size_t task, std::size_t column) const { return windows_.at(entry(task, column)); }

  /// Q^B(i, column); the self-loop column is always zero.
  double value(std::size_t task, std::size_t column) const {
    if (fixed_) return (*fixed_)(static_cast<Eigen::Index>(task), static_cast<Eigen::Index>(column));
    if (column == task + 1) return 0.0;
    return std::max(0.0, success_term(task, column) + cfg_.surprise_weight * surprise_[entry(task, column)]);
  }

  /// Row-normalized B. Rows whose value mass is below 1e-9 are uniform over
  /// the admissible columns (all but the self-loop).
  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd b(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(k_ + 1));
    for (std::size_t i = 0; i < k_; ++i) {
      double total = 0.0;
      for (std::size_t c = 0; c <= k_; ++c) total += value(i, c);
      for (std::size_t c = 0; c <= k_; ++c) {
        const auto r = static_cast<Eigen::Index>(i), cc = static_cast<Eigen::Index>(c);
        if (c == i + 1) b(r, cc) = 0.0;
        else if (total < 1e-9) b(r, cc) = 1.0 / static_cast<double>(k_);
        else b(r, cc) = value(i, c) / total;
      }
    }
    return b;
  }

  /// Greedy predecessor of a task over all admissible columns (kStart or a
  /// task index). Ties resolve to the lowest column.
  int greedy_predecessor(std::size_t task) const {
    const Eigen::MatrixXd b = matrix();
    int best = kStart;
    double best_v = -1.0;
    for (std::size_t c = 0; c <= k_; ++c) {
      if (c == task + 1) continue;
      const double v = b(static_cast<Eigen::Index>(task), static_cast<Eigen::Index>(c));
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(c) - 1;
      }
    }
    return best;
  }

  /// Backward planning from the final task: repeatedly choose a predecessor
  /// among {S} and the tasks not yet in the chain, greedily on B (random
  /// tie-break) or uniformly with probability epsilon, until S is chosen.
  /// The returned chain is in execution order and ends with `final_task`.
  TaskChain plan(std::size_t final_task, Rng& rng, std::optional<double> epsilon = std::nullopt) const {
    if (final_task >= k_) throw std::out_of_range("plan_chain: invalid task");
    const double eps = epsilon.value_or(fixed_ ? 0.0 : cfg_.epsilon);
    const Eigen::MatrixXd b = matrix();
    std::vector<bool> visited(k_, false);
    TaskChain reversed{final_task};
    visited[final_task] = true;
    std::size_t current = final_task;
    std::vector<std::size_t> candidates;  // columns
    std::vector<std::size_t> best;
    for (;;) {
      candidates.assign(1, 0);
      for (std::size_t j = 0; j < k_; ++j)
        if (!visited[j]) candidates.push_back(j + 1);
      std::size_t pick;
      if (bernoulli(rng, eps)) {
        pick = candidates[uniform_index(rng, candidates.size())];
      } else {
        double best_v = -1.0;
        best.clear();
        for (auto c : candidates) {
          const double v = b(static_cast<Eigen::Index>(current), static_cast<Eigen::Index>(c));
          if (v > best_v + 1e-12) {
            best_v = v;
            best.assign(1, c);
          } else if (v >= best_v - 1e-12) {
            best.push_back(c);
          }
        }
        pick = best.size() == 1 ? best[0] : best[uniform_index(rng, best.size())];
      }
      if (pick == 0) break;
      current = pick - 1;
      visited[current] = true;
      reversed.push_back(current);
    }
    return TaskChain(reversed.rbegin(), reversed.rend());
  }

 private:
  std::size_t entry(std::size_t task, std::size_t column) const {
    if (task >= k_ || column > k_) throw std::out_of_range("TaskGraph: entry out of range");
    return task * (k_ + 1) + column;
  }

  TaskGraphConfig cfg_;
  std::size_t k_ = 0;
  std::vector<std::deque<double>> windows_;
  std::vector<double> surprise_;
  std::optional<Eigen::MatrixXd> fixed_;
};

}  // namespace cwyc
