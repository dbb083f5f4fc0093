#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/numerics/rng.hpp"

namespace cwyc {

/// Columns are samples.
struct ReplayBatch {
  Eigen::MatrixXd states, actions, next_states, goals;
  Eigen::VectorXd rewards, dones;
  std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
};

/// Fixed-capacity ring buffer of (s, a, r, s', g, done) with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::size_t state_dim, std::size_t action_dim, std::size_t goal_dim, std::size_t capacity)
      : sd_(state_dim), ad_(action_dim), gd_(goal_dim), capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  }

  void add(const Eigen::VectorXd& s, const Eigen::VectorXd& a, double r, const Eigen::VectorXd& s_next,
           const Eigen::VectorXd& g, bool done) {
    if (static_cast<std::size_t>(s.size()) != sd_ || static_cast<std::size_t>(s_next.size()) != sd_ ||
        static_cast<std::size_t>(a.size()) != ad_ || static_cast<std::size_t>(g.size()) != gd_)
      throw std::invalid_argument("ReplayBuffer: dimension mismatch");
    std::size_t slot;
    if (size_ < capacity_) {
      slot = size_++;
      s_.resize(size_ * sd_);
      a_.resize(size_ * ad_);
      n_.resize(size_ * sd_);
      g_.resize(size_ * gd_);
      r_.resize(size_);
      d_.resize(size_);
    } else {
      slot = next_;
      next_ = (next_ + 1) % capacity_;
    }
    put(s_, sd_, slot, s);
    put(a_, ad_, slot, a);
    put(n_, sd_, slot, s_next);
    put(g_, gd_, slot, g);
    r_[slot] = r;
    d_[slot] = done ? 1.0 : 0.0;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// Gathers the given storage slots.
  ReplayBatch at(const std::vector<std::size_t>& slots) const {
    ReplayBatch b;
    const auto n = static_cast<Eigen::Index>(slots.size());
    b.states.resize(static_cast<Eigen::Index>(sd_), n);
    b.actions.resize(static_cast<Eigen::Index>(ad_), n);
    b.next_states.resize(static_cast<Eigen::Index>(sd_), n);
    b.goals.resize(static_cast<Eigen::Index>(gd_), n);
    b.rewards.resize(n);
    b.dones.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto j = slots[static_cast<std::size_t>(k)];
      if (j >= size_) throw std::out_of_range("ReplayBuffer: slot out of range");
      b.states.col(k) = get(s_, sd_, j);
      b.actions.col(k) = get(a_, ad_, j);
      b.next_states.col(k) = get(n_, sd_, j);
      b.goals.col(k) = get(g_, gd_, j);
      b.rewards[k] = r_[j];
      b.dones[k] = d_[j];
    }
    return b;
  }

  ReplayBatch sample(std::size_t batch_size, Rng& rng) const {
    if (size_ == 0) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
    std::vector<std::size_t> slots(batch_size);
    for (auto& j : slots) j = uniform_index(rng, size_);
    return at(slots);
  }

 private:
  static void put(std::vector<double>& v, std::size_t dim, std::size_t slot, const Eigen::VectorXd& x) {
    Eigen::Map<Eigen::VectorXd>(v.data() + slot * dim, static_cast<Eigen::Index>(dim)) = x;
  }
  static Eigen::Map<const Eigen::VectorXd> get(const std::vector<double>& v, std::size_t dim, std::size_t slot) {
    return {v.data() + slot * dim, static_cast<Eigen::Index>(dim)};
  }

  std::size_t sd_ = 0, ad_ = 0, gd_ = 0, capacity_ = 1;
  std::size_t size_ = 0, next_ = 0;
  std::vector<double> s_, a_, n_, g_, r_, d_;
};

}  // namespace cwyc
