#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/env/playground.hpp"
#include "cwyc/goal_proposal/relational_net.hpp"
#include "cwyc/numerics/rng.hpp"

namespace cwyc {

struct LabeledSample {
  StateVector state;
  double target = 0.0;
  bool interesting() const { return target > 0.0; }
};

/// Targets r(s_t) = min(1, succ_i * switch_t + surprise_t) for one stretch of
/// task j. Zero-target samples after the first positive one are dropped.
inline std::vector<LabeledSample> label_rollout(const std::vector<StateVector>& states,
                                                const std::vector<std::uint8_t>& switch_to_i, bool succ_i,
                                                const std::vector<std::uint8_t>& surprise_i) {
  if (switch_to_i.size() != states.size() || surprise_i.size() != states.size())
    throw std::invalid_argument("label_rollout: one switch and surprise flag per state required");
  std::vector<LabeledSample> out;
  out.reserve(states.size());
  bool seen_positive = false;
  for (std::size_t t = 0; t < states.size(); ++t) {
    const double r = std::min(1.0, (succ_i && switch_to_i[t] ? 1.0 : 0.0) + (surprise_i[t] ? 1.0 : 0.0));
    if (r > 0.0) seen_positive = true;
    else if (seen_positive) continue;
    out.push_back({states[t], r});
  }
  return out;
}

/// Goal for task j under the oracle: the current position of the next task's
/// object.
inline Eigen::VectorXd oracle_goal(const GoalSpaceSpec& spaces, std::size_t next_task, const StateVector& s) {
  return spaces.project(s, next_task);
}

struct GoalProposalConfig {
  RelationalNetConfig net;
  std::size_t positive_capacity = 10000;
  std::size_t negative_capacity = 20000;
  std::size_t refresh_every = 5;  // steps between goal updates
};

/// Bounded sample pool; once full, new samples overwrite uniformly chosen
/// old ones.
class SamplePool {
 public:
  explicit SamplePool(std::size_t capacity = 1) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  void add(const LabeledSample& s, Rng& rng) {
    ++seen_;
    if (items_.size() < capacity_) items_.push_back(s);
    else items_[uniform_index(rng, capacity_)] = s;
  }
  std::size_t size() const { return items_.size(); }
  std::uint64_t seen() const { return seen_; }
  const LabeledSample& operator[](std::size_t i) const { return items_[i]; }
  const LabeledSample& draw(Rng& rng) const { return items_[uniform_index(rng, items_.size())]; }

 private:
  std::size_t capacity_;
  std::vector<LabeledSample> items_;
  std::uint64_t seen_ = 0;
};

/// One relational net per task transition (i <- j), created on first use.
class GoalProposal {
 public:
  struct Entry {
    RelationalNet net;
    SamplePool positives;
    SamplePool negatives;
    std::size_t train_calls = 0;
    double last_loss = 0.0;
  };

  GoalProposal() = default;
  GoalProposal(std::size_t num_tasks, std::size_t state_dim, GoalProposalConfig cfg, std::uint64_t seed)
      : cfg_(cfg), k_(num_tasks), dim_(state_dim), seed_(seed) {}

  const GoalProposalConfig& config() const { return cfg_; }
  std::size_t num_tasks() const { return k_; }

  bool has(std::size_t i, std::size_t j) const { return entries_.count(key(i, j)) > 0; }
  const Entry* find(std::size_t i, std::size_t j) const {
    auto it = entries_.find(key(i, j));
    return it == entries_.end() ? nullptr : &it->second;
  }
  Entry& entry(std::size_t i, std::size_t j) {
    const auto k = key(i, j);
    auto it = entries_.find(k);
    if (it == entries_.end()) {
      Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
      Entry e{RelationalNet::random(dim_, cfg_.net, rng), SamplePool(cfg_.positive_capacity), SamplePool(cfg_.negative_capacity)};
      it = entries_.emplace(k, std::move(e)).first;
    }
    return it->second;
  }
  const std::map<std::pair<std::size_t, std::size_t>, Entry>& entries() const { return entries_; }

  std::size_t positives(std::size_t i, std::size_t j) const {
    const Entry* e = find(i, j);
    return e ? e->positives.size() : 0;
  }

  void add(std::size_t i, std::size_t j, const std::vector<LabeledSample>& samples, Rng& rng) {
    if (samples.empty()) return;
    Entry& e = entry(i, j);
    for (const auto& s : samples) (s.interesting() ? e.positives : e.negatives).add(s, rng);
  }

  /// Balanced regression on every net that has at least one positive sample.
  /// Half of each batch comes from the positive pool and half from the
  /// undetermined pool (all positive if that pool is empty).
  std::size_t train(Rng& rng) {
    std::size_t trained = 0;
    const std::size_t b = std::max<std::size_t>(cfg_.net.batch_size, 2);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(b));
    Eigen::VectorXd y(static_cast<Eigen::Index>(b));
    for (auto& [k, e] : entries_) {
      if (e.positives.size() == 0) continue;
      for (std::size_t it = 0; it < cfg_.net.train_iterations; ++it) {
        for (std::size_t c = 0; c < b; ++c) {
          const bool pos = c < b / 2 || e.negatives.size() == 0;
          const LabeledSample& s = pos ? e.positives.draw(rng) : e.negatives.draw(rng);
          x.col(static_cast<Eigen::Index>(c)) = s.state;
          y[static_cast<Eigen::Index>(c)] = s.target;
        }
        e.last_loss = e.net.train_step(x, y);
      }
      ++e.train_calls;
      ++trained;
    }
    return trained;
  }

  /// Goal for task j when the chain continues with task i. `pinned` lists the
  /// coordinates held at their current value (goal spaces of i and every later
  /// chain element). Without any positive sample the goal is uniform in the
  /// arena.
  Eigen::VectorXd sample_goal(std::size_t i, std::size_t j, const StateVector& s, const std::vector<std::size_t>& pinned,
                              const std::vector<std::size_t>& goal_indices, double half_size, Rng& rng) const {
    Eigen::VectorXd g(static_cast<Eigen::Index>(goal_indices.size()));
    const Entry* e = find(i, j);
    if (!e || e->positives.size() == 0) {
      for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = uniform(rng, -half_size, half_size);
      return g;
    }
    const Eigen::VectorXd best = e->net.argmax(s, pinned);
    for (std::size_t k = 0; k < goal_indices.size(); ++k)
      g[static_cast<Eigen::Index>(k)] = std::clamp(best[static_cast<Eigen::Index>(goal_indices[k])], -half_size, half_size);
    return g;
  }

  /// |w1|, |w2|, |w3| of one net as dim x dim upper-triangular matrices.
  static std::array<Eigen::MatrixXd, 3> weight_magnitudes(const RelationalNet& net) {
    const auto n = static_cast<Eigen::Index>(net.dim());
    std::array<Eigen::MatrixXd, 3> w{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (std::size_t p = 0; p < net.num_pairs(); ++p) {
      const auto [k, l] = net.pair(p);
      const auto r = static_cast<Eigen::Index>(k), c = static_cast<Eigen::Index>(l);
      w[0](r, c) = std::abs(net.w1(p));
      w[1](r, c) = std::abs(net.w2(p));
      w[2](r, c) = std::abs(net.w3(p));
    }
    return w;
  }

  Eigen::VectorXd parameters() const {
    std::vector<double> all;
    for (const auto& [k, e] : entries_) all.insert(all.end(), e.net.params().data(), e.net.params().data() + e.net.params().size());
    return Eigen::Map<const Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
  }

 private:
  std::pair<std::size_t, std::size_t> key(std::size_t i, std::size_t j) const {
    if (i >= k_ || j >= k_ || i == j) throw std::out_of_range("goal proposal: invalid task transition");
    return {i, j};
  }

  GoalProposalConfig cfg_;
  std::size_t k_ = 0;
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, Entry> entries_;
};

}  // namespace cwyc
