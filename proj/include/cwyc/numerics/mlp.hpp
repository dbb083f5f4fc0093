#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/numerics/rng.hpp"

namespace cwyc {

enum class Activation { Identity, Tanh, Relu };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected feed-forward network. All parameters live in one flat
/// vector laid out layer by layer as [W (out x in, row-major), b (out)], which
/// is also the checkpoint order.
class Mlp {
 public:
  Mlp() = default;

  /// widths = {in, hidden..., out}; every hidden layer uses `hidden`, the
  /// output layer is always identity. Parameters start at zero.
  Mlp(std::vector<std::size_t> widths, Activation hidden = Activation::Tanh)
      : Mlp(widths, std::vector<Activation>(widths.size() >= 2 ? widths.size() - 2 : 0, hidden)) {}

  Mlp(std::vector<std::size_t> widths, std::vector<Activation> hidden)
      : widths_(std::move(widths)), hidden_(std::move(hidden)) {
    if (widths_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
    if (hidden_.size() != widths_.size() - 2)
      throw std::invalid_argument("Mlp: one activation per hidden layer required");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      if (widths_[l] == 0 || widths_[l + 1] == 0) throw std::invalid_argument("Mlp: zero layer width");
      offsets_.push_back(total);
      total += (widths_[l] + 1) * widths_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  }

  /// Uniform +-1/sqrt(fan_in) weights, zero biases.
  static Mlp random(std::vector<std::size_t> widths, Activation hidden, Rng& rng) {
    Mlp net(std::move(widths), hidden);
    net.init_uniform(rng);
    return net;
  }

  void init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
      auto w = weight(l);
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng, -bound, bound);
      bias(l).setZero();
    }
  }

  std::size_t num_layers() const { return widths_.size() - 1; }
  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<Activation>& hidden_activations() const { return hidden_; }
  Activation activation(std::size_t layer) const {
    return layer + 1 < num_layers() ? hidden_[layer] : Activation::Identity;
  }

  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<RowMajorMatrix> weight(std::size_t l) {
    return {params_.data() + offsets_[l], rows(l), cols(l)};
  }
  Eigen::Map<const RowMajorMatrix> weight(std::size_t l) const {
    return {params_.data() + offsets_[l], rows(l), cols(l)};
  }
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + rows(l) * cols(l), rows(l)};
  }
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + rows(l) * cols(l), rows(l)};
  }
  std::size_t layer_offset(std::size_t l) const { return offsets_[l]; }

 private:
  Eigen::Index rows(std::size_t l) const { return static_cast<Eigen::Index>(widths_[l + 1]); }
  Eigen::Index cols(std::size_t l) const { return static_cast<Eigen::Index>(widths_[l]); }

  std::vector<std::size_t> widths_;
  std::vector<Activation> hidden_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

/// Activations cached by a forward pass; columns are samples.
struct MlpTape {
  std::vector<Eigen::MatrixXd> activations;  // [0] = input, [l+1] = output of layer l
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

namespace detail {

inline void apply_activation(Activation a, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Identity: break;
    case Activation::Tanh: z = z.array().tanh(); break;
    case Activation::Relu: z = z.array().max(0.0); break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the post-activation value `out`.
inline void activation_backward(Activation a, const Eigen::MatrixXd& out, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::Identity: break;
    case Activation::Tanh: grad.array() *= 1.0 - out.array().square(); break;
    case Activation::Relu: grad.array() *= (out.array() > 0.0).cast<double>(); break;
  }
}

}  // namespace detail

/// Batched forward pass; `x` is (input_dim x batch).
inline const Eigen::MatrixXd& mlp_forward(const Mlp& net, const Eigen::MatrixXd& x, MlpTape& tape) {
  if (static_cast<std::size_t>(x.rows()) != net.input_dim())
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(net.input_dim()));
  tape.activations.resize(net.num_layers() + 1);
  tape.activations[0] = x;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd z = net.weight(l) * tape.activations[l];
    z.colwise() += net.bias(l);
    detail::apply_activation(net.activation(l), z);
    tape.activations[l + 1] = std::move(z);
  }
  return tape.output();
}

inline Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x) {
  MlpTape tape;
  return mlp_forward(net, x, tape);
}

inline Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& x) {
  MlpTape tape;
  return mlp_forward(net, Eigen::MatrixXd(x), tape).col(0);
}

struct MlpGradients {
  Eigen::VectorXd params;  // same layout as Mlp::params(), summed over the batch
  Eigen::MatrixXd input;   // d(output . upstream)/d(input), per sample
};

/// Backward pass through the cached tape: gradients of sum_b upstream_b . y_b.
inline MlpGradients mlp_backward(const Mlp& net, const MlpTape& tape, const Eigen::MatrixXd& upstream) {
  if (tape.activations.size() != net.num_layers() + 1)
    throw std::invalid_argument("mlp_backward: tape does not belong to this network");
  if (upstream.rows() != tape.output().rows() || upstream.cols() != tape.output().cols())
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");
  MlpGradients g;
  g.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    detail::activation_backward(net.activation(l), tape.activations[l + 1], delta);
    const auto rows = static_cast<Eigen::Index>(net.widths()[l + 1]);
    const auto cols = static_cast<Eigen::Index>(net.widths()[l]);
    Eigen::Map<RowMajorMatrix> dw(g.params.data() + net.layer_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> db(g.params.data() + net.layer_offset(l) + rows * cols, rows);
    dw.noalias() = delta * tape.activations[l].transpose();
    db = delta.rowwise().sum();
    delta = net.weight(l).transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

}  // namespace cwyc
