#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/env/playground.hpp"
#include "cwyc/numerics/adam.hpp"
#include "cwyc/numerics/mlp.hpp"
#include "cwyc/numerics/rng.hpp"

namespace cwyc {

struct ForwardModelConfig {
  std::size_t layer_size = 100;
  std::size_t num_layers = 9;  // hidden layers
  Activation activation = Activation::Tanh;
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t train_iterations = 100;
  std::size_t buffer_capacity = 200000;
};

/// Columns are samples.
struct TransitionBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd next_states;

  std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
};

/// Learned dynamics f(s, a) ~ s' - s. Inputs are multiplied element-wise by a
/// fixed scale vector before entering the network.
class ForwardModel {
 public:
  ForwardModel() = default;

  ForwardModel(std::size_t state_dim, std::size_t action_dim, const ForwardModelConfig& cfg, Rng& rng,
               Eigen::VectorXd input_scale = {})
      : cfg_(cfg), state_dim_(state_dim), action_dim_(action_dim) {
    std::vector<std::size_t> widths{state_dim + action_dim};
    for (std::size_t l = 0; l < cfg.num_layers; ++l) widths.push_back(cfg.layer_size);
    widths.push_back(state_dim);
    net_ = Mlp::random(widths, cfg.activation, rng);
    adam_ = AdamState(net_.num_params(), AdamConfig{cfg.learning_rate});
    input_scale_ = input_scale.size() ? std::move(input_scale)
                                      : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(state_dim + action_dim));
    if (static_cast<std::size_t>(input_scale_.size()) != state_dim + action_dim)
      throw std::invalid_argument("ForwardModel: input scale has wrong size");
  }

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  const ForwardModelConfig& config() const { return cfg_; }
  const AdamState& adam() const { return adam_; }

  /// Predicted state change for each column.
  Eigen::MatrixXd predict_delta(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
    return mlp_forward(net_, inputs(states, actions));
  }

  Eigen::VectorXd predict_delta(const StateVector& s, const Eigen::VectorXd& a) const {
    return predict_delta(Eigen::MatrixXd(s), Eigen::MatrixXd(a)).col(0);
  }

  /// Loss (mean over samples of the squared residual norm) and its gradient.
  std::pair<double, Eigen::VectorXd> loss_and_gradient(const TransitionBatch& batch) const {
    if (batch.size() == 0) throw std::invalid_argument("fm_train: empty batch");
    MlpTape tape;
    const auto& pred = mlp_forward(net_, inputs(batch.states, batch.actions), tape);
    const Eigen::MatrixXd resid = pred - (batch.next_states - batch.states);
    const double n = static_cast<double>(batch.size());
    const double loss = resid.squaredNorm() / n;
    auto g = mlp_backward(net_, tape, (2.0 / n) * resid);
    return {loss, std::move(g.params)};
  }

  /// One Adam step on the batch; returns the loss before the step.
  double train_step(const TransitionBatch& batch) {
    auto [loss, grad] = loss_and_gradient(batch);
    adam_step(net_.params(), grad, adam_);
    return loss;
  }

  /// Appends transitions to the bounded training buffer (oldest overwritten).
  void add(const TransitionBatch& batch) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      std::size_t slot;
      if (stored_ < cfg_.buffer_capacity) {
        slot = stored_++;
        buf_s_.resize(stored_ * state_dim_);
        buf_a_.resize(stored_ * action_dim_);
        buf_n_.resize(stored_ * state_dim_);
      } else {
        slot = next_slot_;
        next_slot_ = (next_slot_ + 1) % cfg_.buffer_capacity;
      }
      col(buf_s_, state_dim_, slot) = batch.states.col(c);
      col(buf_a_, action_dim_, slot) = batch.actions.col(c);
      col(buf_n_, state_dim_, slot) = batch.next_states.col(c);
    }
  }

  std::size_t buffer_size() const { return stored_; }

  /// `iterations` Adam steps on uniformly sampled minibatches of the buffer.
  /// Returns the last batch loss (0 when the buffer is empty).
  double train(std::size_t iterations, Rng& rng) {
    if (stored_ == 0) return 0.0;
    double loss = 0.0;
    TransitionBatch batch;
    const auto b = static_cast<Eigen::Index>(cfg_.batch_size);
    batch.states.resize(static_cast<Eigen::Index>(state_dim_), b);
    batch.actions.resize(static_cast<Eigen::Index>(action_dim_), b);
    batch.next_states.resize(static_cast<Eigen::Index>(state_dim_), b);
    for (std::size_t it = 0; it < iterations; ++it) {
      for (Eigen::Index k = 0; k < b; ++k) {
        const auto j = uniform_index(rng, stored_);
        batch.states.col(k) = col(buf_s_, state_dim_, j);
        batch.actions.col(k) = col(buf_a_, action_dim_, j);
        batch.next_states.col(k) = col(buf_n_, state_dim_, j);
      }
      loss = train_step(batch);
    }
    return loss;
  }

 private:
  static Eigen::Map<Eigen::VectorXd> col(std::vector<double>& v, std::size_t dim, std::size_t slot) {
    return {v.data() + slot * dim, static_cast<Eigen::Index>(dim)};
  }

  Eigen::MatrixXd inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const {
    if (static_cast<std::size_t>(states.rows()) != state_dim_ || static_cast<std::size_t>(actions.rows()) != action_dim_ ||
        states.cols() != actions.cols())
      throw std::invalid_argument("ForwardModel: state/action dimensions do not match the model");
    Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
    x << states, actions;
    return x.array().colwise() * input_scale_.array();
  }

  ForwardModelConfig cfg_;
  std::size_t state_dim_ = 0;
  std::size_t action_dim_ = 0;
  Mlp net_;
  AdamState adam_;
  Eigen::VectorXd input_scale_;
  std::vector<double> buf_s_, buf_a_, buf_n_;
  std::size_t stored_ = 0;
  std::size_t next_slot_ = 0;
};

/// Prediction errors of one transition: e = ||f(s,a) + s - s'||^2 over the
/// full state, and its restriction e_i to every goal space.
struct PredictionError {
  double full = 0.0;
  std::vector<double> per_task;
};

inline PredictionError prediction_error(const Eigen::VectorXd& predicted_delta, const StateVector& s,
                                        const StateVector& s_next, const GoalSpaceSpec& spaces) {
  if (predicted_delta.size() != s.size() || s.size() != s_next.size())
    throw std::invalid_argument("prediction_error: dimension mismatch");
  const Eigen::VectorXd r = predicted_delta + s - s_next;
  PredictionError e;
  e.full = r.squaredNorm();
  e.per_task.reserve(spaces.size());
  for (const auto& t : spaces.tasks) {
    double acc = 0.0;
    for (auto i : t.indices) acc += r[static_cast<Eigen::Index>(i)] * r[static_cast<Eigen::Index>(i)];
    e.per_task.push_back(acc);
  }
  return e;
}

inline PredictionError fm_predict_error(const ForwardModel& fm, const StateVector& s, const Eigen::VectorXd& a,
                                        const StateVector& s_next, const GoalSpaceSpec& spaces) {
  return prediction_error(fm.predict_delta(s, a), s, s_next, spaces);
}

/// Per-task error series of a whole trajectory: result[task][t] for the
/// transition states[t] -> states[t+1].
template <class ActionVector>
std::vector<std::vector<double>> trajectory_errors(const ForwardModel& fm, const std::vector<StateVector>& states,
                                                   const std::vector<ActionVector>& actions,
                                                          const GoalSpaceSpec& spaces) {
  std::vector<std::vector<double>> out(spaces.size());
  if (actions.empty()) return out;
  if (states.size() != actions.size() + 1) throw std::invalid_argument("trajectory_errors: need T+1 states for T actions");
  const auto T = static_cast<Eigen::Index>(actions.size());
  Eigen::MatrixXd S(static_cast<Eigen::Index>(fm.state_dim()), T), A(static_cast<Eigen::Index>(fm.action_dim()), T);
  for (Eigen::Index t = 0; t < T; ++t) {
    S.col(t) = states[static_cast<std::size_t>(t)];
    A.col(t) = actions[static_cast<std::size_t>(t)];
  }
  const Eigen::MatrixXd pred = fm.predict_delta(S, A);
  for (auto& v : out) v.reserve(actions.size());
  for (Eigen::Index t = 0; t < T; ++t) {
    auto e = prediction_error(pred.col(t), states[static_cast<std::size_t>(t)], states[static_cast<std::size_t>(t) + 1], spaces);
    for (std::size_t i = 0; i < spaces.size(); ++i) out[i].push_back(e.per_task[i]);
  }
  return out;
}

}  // namespace cwyc
