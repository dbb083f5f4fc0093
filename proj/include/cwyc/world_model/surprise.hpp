#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cwyc/numerics/running_stats.hpp"

namespace cwyc {

struct SurpriseConfig {
  double theta = 5.0;
  double history_weight = 0.99;  // 1.0 = unweighted statistics over all experience
  std::uint64_t warmup = 500;    // error-difference samples per task before flags can fire
};

/// Flags steps whose prediction-error finite difference leaves the
/// confidence band mu + theta * sigma of the history of such differences.
class SurpriseDetector {
 public:
  SurpriseDetector() = default;
  SurpriseDetector(std::size_t num_tasks, SurpriseConfig cfg) : cfg_(cfg), stats_(num_tasks, RunningStats(cfg.history_weight)) {
    if (!(cfg.theta > 0.0)) throw std::invalid_argument("surprise: theta must be > 0");
  }

  const SurpriseConfig& config() const { return cfg_; }
  std::size_t num_tasks() const { return stats_.size(); }
  const RunningStats& stats(std::size_t task) const { return stats_.at(task); }

  /// Consumes one rollout's error series of `task`. Entry t of the result
  /// refers to the same step as errors[t]; t = 0 has no difference and is
  /// never flagged. Each difference is tested against the statistics of all
  /// earlier differences and only then folded into them.
  std::vector<std::uint8_t> process(std::size_t task, const std::vector<double>& errors) {
    auto& st = stats_.at(task);
    std::vector<std::uint8_t> flags(errors.size(), 0);
    for (std::size_t t = 1; t < errors.size(); ++t) {
      const double diff = errors[t] - errors[t - 1];
      if (st.count() >= cfg_.warmup && std::abs(diff) > st.mean() + cfg_.theta * st.stddev()) flags[t] = 1;
      st.update(diff);
    }
    return flags;
  }

  /// All tasks of one rollout; errors[task][t].
  std::vector<std::vector<std::uint8_t>> process(const std::vector<std::vector<double>>& errors) {
    if (errors.size() != stats_.size()) throw std::invalid_argument("surprise: one error series per task required");
    std::vector<std::vector<std::uint8_t>> out;
    out.reserve(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) out.push_back(process(i, errors[i]));
    return out;
  }

 private:
  SurpriseConfig cfg_;
  std::vector<RunningStats> stats_;
};

inline bool any_flag(const std::vector<std::uint8_t>& flags) {
  for (auto f : flags)
    if (f) return true;
  return false;
}

}  // namespace cwyc
