#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace cwyc {

/// Streaming mean/variance of a scalar signal.
///
/// Unweighted mode (weight == 1) is Welford's algorithm and reports the
/// population variance (divide by N). With weight w in (0,1) the estimate is
/// exponentially weighted: every new sample gets mass (1 - w) and the history
/// decays by w per sample. The first sample initializes the mean in both modes.
class RunningStats {
 public:
  explicit RunningStats(double weight = 1.0) : weight_(weight) {}

  void update(double x) {
    ++count_;
    if (count_ == 1) {
      mean_ = x;
      m2_ = 0.0;
      return;
    }
    const double diff = x - mean_;
    if (weighted()) {
      const double incr = (1.0 - weight_) * diff;
      mean_ += incr;
      m2_ = weight_ * (m2_ + diff * incr);
    } else {
      mean_ += diff / static_cast<double>(count_);
      m2_ += diff * (x - mean_);
    }
  }

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const {
    if (count_ == 0) return 0.0;
    const double v = weighted() ? m2_ : m2_ / static_cast<double>(count_);
    return std::max(v, 0.0);
  }
  double stddev() const { return std::sqrt(variance()); }
  double weight() const { return weight_; }
  bool weighted() const { return weight_ < 1.0; }

 private:
  double weight_;
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace cwyc
