#pragma once

// Pairwise-affine attention model
//
//   gnet(s) = exp(-gamma * sum_{k<l} (w1_kl s_k + w2_kl s_l + w3_kl)^2)
//
// scoring states as switch points between two tasks, and its constrained
// analytic argmax.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/numerics/adam.hpp"
#include "cwyc/numerics/rng.hpp"

namespace cwyc {

struct RelationalNetConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t train_iterations = 100;
  double gamma_init = 1.0;
  bool gamma_trainable = true;
  double init_scale = 0.01;  // weights start uniform in +-init_scale
  double ridge = 1e-8;
};

class RelationalNet {
 public:
  RelationalNet() = default;

  /// Zero weights, gamma = gamma_init.
  RelationalNet(std::size_t dim, RelationalNetConfig cfg) : cfg_(cfg), dim_(dim) {
    if (dim < 2) throw std::invalid_argument("RelationalNet: need at least two coordinates");
    if (!(cfg.gamma_init > 0.0)) throw std::invalid_argument("RelationalNet: gamma must be > 0");
    for (std::size_t k = 0; k < dim; ++k)
      for (std::size_t l = k + 1; l < dim; ++l) {
        first_.push_back(static_cast<Eigen::Index>(k));
        second_.push_back(static_cast<Eigen::Index>(l));
      }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * num_pairs() + 1));
    params_[params_.size() - 1] = std::log(cfg.gamma_init);
    adam_ = AdamState(static_cast<std::size_t>(params_.size()), AdamConfig{cfg.learning_rate});
  }

  static RelationalNet random(std::size_t dim, RelationalNetConfig cfg, Rng& rng) {
    RelationalNet net(dim, cfg);
    for (Eigen::Index i = 0; i + 1 < net.params_.size(); ++i) net.params_[i] = uniform(rng, -cfg.init_scale, cfg.init_scale);
    return net;
  }

  std::size_t dim() const { return dim_; }
  std::size_t num_pairs() const { return first_.size(); }
  const RelationalNetConfig& config() const { return cfg_; }

  /// Index of the pair (k, l), k < l.
  std::size_t pair_index(std::size_t k, std::size_t l) const {
    if (k >= l || l >= dim_) throw std::out_of_range("RelationalNet: pair must satisfy k < l < dim");
    return k * dim_ - k * (k + 1) / 2 + (l - k - 1);
  }
  std::pair<std::size_t, std::size_t> pair(std::size_t p) const {
    return {static_cast<std::size_t>(first_[p]), static_cast<std::size_t>(second_[p])};
  }

  double& w1(std::size_t p) { return params_[static_cast<Eigen::Index>(p)]; }
  double& w2(std::size_t p) { return params_[static_cast<Eigen::Index>(num_pairs() + p)]; }
  double& w3(std::size_t p) { return params_[static_cast<Eigen::Index>(2 * num_pairs() + p)]; }
  double w1(std::size_t p) const { return params_[static_cast<Eigen::Index>(p)]; }
  double w2(std::size_t p) const { return params_[static_cast<Eigen::Index>(num_pairs() + p)]; }
  double w3(std::size_t p) const { return params_[static_cast<Eigen::Index>(2 * num_pairs() + p)]; }
  double gamma() const { return std::exp(params_[params_.size() - 1]); }
  void set_gamma(double g) { params_[params_.size() - 1] = std::log(g); }

  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }
  const AdamState& adam() const { return adam_; }

  /// Sum of squared pairwise residuals.
  double exponent(const Eigen::VectorXd& s) const {
    check_dim(s.size());
    double e = 0.0;
    for (std::size_t p = 0; p < num_pairs(); ++p) {
      const double r = w1(p) * s[first_[p]] + w2(p) * s[second_[p]] + w3(p);
      e += r * r;
    }
    return e;
  }

  double evaluate(const Eigen::VectorXd& s) const { return std::exp(-gamma() * exponent(s)); }

  /// Columns of `states` are samples. Returns per-sample residuals (pairs x batch).
  Eigen::MatrixXd residuals(const Eigen::MatrixXd& states) const {
    check_dim(states.rows());
    const auto P = static_cast<Eigen::Index>(num_pairs());
    Eigen::MatrixXd r(P, states.cols());
    for (Eigen::Index p = 0; p < P; ++p)
      r.row(p) = (w1(static_cast<std::size_t>(p)) * states.row(first_[static_cast<std::size_t>(p)]) +
                  w2(static_cast<std::size_t>(p)) * states.row(second_[static_cast<std::size_t>(p)]))
                     .array() +
                 w3(static_cast<std::size_t>(p));
    return r;
  }

  /// Mean squared regression loss against `targets` and its gradient with
  /// respect to params() (w1, w2, w3, log gamma).
  std::pair<double, Eigen::VectorXd> loss_and_gradient(const Eigen::MatrixXd& states, const Eigen::VectorXd& targets) const {
    const auto B = states.cols();
    if (targets.size() != B || B == 0) throw std::invalid_argument("RelationalNet: one target per sample required");
    const Eigen::MatrixXd r = residuals(states);
    const Eigen::RowVectorXd e = r.colwise().squaredNorm();
    const double g = gamma();
    const Eigen::RowVectorXd out = (-g * e).array().exp();
    const Eigen::RowVectorXd diff = out - targets.transpose();
    const double n = static_cast<double>(B);
    const double loss = diff.squaredNorm() / n;
    // dL/dE per sample
    const Eigen::RowVectorXd dl_de = (2.0 / n) * diff.array() * (-g) * out.array();
    // dL/dr = dL/dE * 2r
    const Eigen::MatrixXd dl_dr = 2.0 * (r.array().rowwise() * dl_de.array()).matrix();
    const auto P = static_cast<Eigen::Index>(num_pairs());
    Eigen::VectorXd grad(params_.size());
    for (Eigen::Index p = 0; p < P; ++p) {
      grad[p] = dl_dr.row(p).dot(states.row(first_[static_cast<std::size_t>(p)]));
      grad[P + p] = dl_dr.row(p).dot(states.row(second_[static_cast<std::size_t>(p)]));
      grad[2 * P + p] = dl_dr.row(p).sum();
    }
    grad[grad.size() - 1] = cfg_.gamma_trainable ? (2.0 / n) * (diff.array() * out.array() * (-g) * e.array()).sum() : 0.0;
    return {loss, grad};
  }

  double train_step(const Eigen::MatrixXd& states, const Eigen::VectorXd& targets) {
    auto [loss, grad] = loss_and_gradient(states, targets);
    adam_step(params_, grad, adam_);
    return loss;
  }

  /// The exponent as a quadratic form: E(s) = s'As + 2h's + c.
  struct Quadratic {
    Eigen::MatrixXd A;
    Eigen::VectorXd h;
    double c = 0.0;
  };

  Quadratic quadratic() const {
    const auto n = static_cast<Eigen::Index>(dim_);
    Quadratic q{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), 0.0};
    for (std::size_t p = 0; p < num_pairs(); ++p) {
      const auto k = first_[p], l = second_[p];
      const double a = w1(p), b = w2(p), c = w3(p);
      q.A(k, k) += a * a;
      q.A(l, l) += b * b;
      q.A(k, l) += a * b;
      q.A(l, k) += a * b;
      q.h[k] += a * c;
      q.h[l] += b * c;
      q.c += c * c;
    }
    return q;
  }

  /// argmax_s gnet(s) subject to s_i = anchor_i for every pinned index i.
  /// The free block solves (A_ff + ridge I) x = -(A_fp s_p + h_f); pinned
  /// coordinates are copied from `anchor` unchanged.
  Eigen::VectorXd argmax(const Eigen::VectorXd& anchor, const std::vector<std::size_t>& pinned) const {
    check_dim(anchor.size());
    std::vector<bool> is_pinned(dim_, false);
    for (auto i : pinned) {
      if (i >= dim_) throw std::out_of_range("argmax: pinned index out of range");
      is_pinned[i] = true;
    }
    std::vector<Eigen::Index> free_idx, pin_idx;
    for (std::size_t i = 0; i < dim_; ++i) (is_pinned[i] ? pin_idx : free_idx).push_back(static_cast<Eigen::Index>(i));
    Eigen::VectorXd out = anchor;
    if (free_idx.empty()) return out;
    const Quadratic q = quadratic();
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd Aff(nf, nf);
    Eigen::VectorXd rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) Aff(a, b) = q.A(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
      double acc = q.h[free_idx[static_cast<std::size_t>(a)]];
      for (auto p : pin_idx) acc += q.A(free_idx[static_cast<std::size_t>(a)], p) * anchor[p];
      rhs[a] = -acc;
    }
    Aff.diagonal().array() += cfg_.ridge;
    const Eigen::VectorXd x = Aff.ldlt().solve(rhs);
    for (Eigen::Index a = 0; a < nf; ++a) out[free_idx[static_cast<std::size_t>(a)]] = x[a];
    return out;
  }

 private:
  void check_dim(Eigen::Index n) const {
    if (static_cast<std::size_t>(n) != dim_) throw std::invalid_argument("RelationalNet: state dimension mismatch");
  }

  RelationalNetConfig cfg_;
  std::size_t dim_ = 0;
  std::vector<Eigen::Index> first_, second_;
  Eigen::VectorXd params_;
  AdamState adam_;
};

}  // namespace cwyc
