#pragma once

// Entropy-regularized off-policy actor-critic with twin critics, a
// tanh-squashed Gaussian actor and goal-conditioned (UVFA) inputs.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/control/policy.hpp"
#include "cwyc/control/replay_buffer.hpp"
#include "cwyc/numerics/adam.hpp"
#include "cwyc/numerics/mlp.hpp"
#include "cwyc/numerics/rng.hpp"

namespace cwyc {

struct ActorCriticConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::Relu;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double discount = 0.99;
  double tau = 5e-3;
  double alpha = 0.2;         // entropy coefficient
  double reward_scale = 5.0;
  std::size_t batch_size = 64;
  std::size_t train_iterations = 200;
  std::size_t buffer_capacity = 1000000;
  double input_scale = 1.0;   // multiplies state and goal coordinates
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  bool her = false;
  std::size_t her_k = 4;
};

struct SquashedSample {
  Eigen::MatrixXd noise;     // xi
  Eigen::MatrixXd pre_tanh;  // u = mean + exp(log_std) * xi
  Eigen::MatrixXd action;    // tanh(u), in (-1, 1)
  Eigen::RowVectorXd log_prob;
};

class ActorCritic {
 public:
  ActorCritic() = default;

  ActorCritic(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim, double max_action,
              const ActorCriticConfig& cfg, Rng& rng)
      : cfg_(cfg), sd_(state_dim), gd_(goal_dim), ad_(action_dim), max_action_(max_action) {
    if (!(max_action > 0.0)) throw std::invalid_argument("ActorCritic: max_action must be > 0");
    std::vector<std::size_t> aw{sd_ + gd_}, cw{sd_ + gd_ + ad_};
    for (auto h : cfg.hidden) {
      aw.push_back(h);
      cw.push_back(h);
    }
    aw.push_back(2 * ad_);
    cw.push_back(1);
    actor_ = Mlp::random(aw, cfg.activation, rng);
    critic1_ = Mlp::random(cw, cfg.activation, rng);
    critic2_ = Mlp::random(cw, cfg.activation, rng);
    target1_ = critic1_;
    target2_ = critic2_;
    actor_opt_ = AdamState(actor_.num_params(), AdamConfig{cfg.actor_lr});
    critic1_opt_ = AdamState(critic1_.num_params(), AdamConfig{cfg.critic_lr});
    critic2_opt_ = AdamState(critic2_.num_params(), AdamConfig{cfg.critic_lr});
  }

  const ActorCriticConfig& config() const { return cfg_; }
  std::size_t state_dim() const { return sd_; }
  std::size_t goal_dim() const { return gd_; }
  std::size_t action_dim() const { return ad_; }
  double max_action() const { return max_action_; }

  const Mlp& actor() const { return actor_; }
  Mlp& actor() { return actor_; }
  const Mlp& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  Mlp& critic(int i) { return i == 0 ? critic1_ : critic2_; }
  const Mlp& target(int i) const { return i == 0 ? target1_ : target2_; }

  Eigen::MatrixXd observation(const Eigen::MatrixXd& states, const Eigen::MatrixXd& goals) const {
    if (static_cast<std::size_t>(states.rows()) != sd_ || static_cast<std::size_t>(goals.rows()) != gd_ ||
        states.cols() != goals.cols())
      throw std::invalid_argument("ActorCritic: observation dimension mismatch");
    Eigen::MatrixXd x(states.rows() + goals.rows(), states.cols());
    x << states, goals;
    return cfg_.input_scale * x;
  }

  /// Mean and clamped log-std heads.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> heads(const Eigen::MatrixXd& obs) const {
    const Eigen::MatrixXd out = mlp_forward(actor_, obs);
    const auto a = static_cast<Eigen::Index>(ad_);
    return {out.topRows(a), out.bottomRows(a).cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max)};
  }

  SquashedSample sample(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std, Rng& rng) const {
    SquashedSample s;
    s.noise.resize(mean.rows(), mean.cols());
    for (Eigen::Index j = 0; j < mean.cols(); ++j)
      for (Eigen::Index i = 0; i < mean.rows(); ++i) s.noise(i, j) = gaussian(rng, 0.0, 1.0);
    s.pre_tanh = mean.array() + log_std.array().exp() * s.noise.array();
    s.action = s.pre_tanh.array().tanh();
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    s.log_prob = (-0.5 * s.noise.array().square() - log_std.array() - half_log_2pi -
                  (1.0 - s.action.array().square() + kSquashEps).log())
                     .colwise()
                     .sum();
    return s;
  }

  /// Force-space action for one state.
  Action act(const StateVector& s, const Eigen::VectorXd& g, bool explore, Rng& rng) const {
    const Eigen::MatrixXd obs = observation(Eigen::MatrixXd(s), Eigen::MatrixXd(g));
    auto [mean, log_std] = heads(obs);
    Eigen::VectorXd a = explore ? sample(mean, log_std, rng).action.col(0) : Eigen::VectorXd(mean.col(0).array().tanh());
    Action out = Action::Zero();
    out.head(std::min<Eigen::Index>(2, a.size())) = max_action_ * a.head(std::min<Eigen::Index>(2, a.size()));
    return out;
  }

  /// Mean over the batch of (Q_c(s, a) - y)^2 for both critics.
  std::pair<double, double> critic_losses(const ReplayBatch& b, const Eigen::RowVectorXd& y) const {
    const Eigen::MatrixXd qin = critic_input(observation(b.states, b.goals), b.actions / max_action_);
    const double n = static_cast<double>(b.size());
    return {(mlp_forward(critic1_, qin).row(0) - y).squaredNorm() / n, (mlp_forward(critic2_, qin).row(0) - y).squaredNorm() / n};
  }

  /// Soft Bellman targets with the target critics.
  Eigen::RowVectorXd targets(const ReplayBatch& b, Rng& rng) const {
    const Eigen::MatrixXd next_obs = observation(b.next_states, b.goals);
    auto [mean, log_std] = heads(next_obs);
    const SquashedSample nxt = sample(mean, log_std, rng);
    const Eigen::MatrixXd qin = critic_input(next_obs, nxt.action);
    const Eigen::RowVectorXd q = mlp_forward(target1_, qin).row(0).cwiseMin(mlp_forward(target2_, qin).row(0));
    const Eigen::RowVectorXd soft = q - cfg_.alpha * nxt.log_prob;
    return cfg_.reward_scale * b.rewards.transpose().array() +
           cfg_.discount * (1.0 - b.dones.transpose().array()) * soft.array();
  }

  /// One gradient step on both critics towards y; returns the mean loss.
  double critic_step(const ReplayBatch& b, const Eigen::RowVectorXd& y) {
    const Eigen::MatrixXd qin = critic_input(observation(b.states, b.goals), b.actions / max_action_);
    const double n = static_cast<double>(b.size());
    double total = 0.0;
    for (int c = 0; c < 2; ++c) {
      Mlp& net = c == 0 ? critic1_ : critic2_;
      MlpTape tape;
      const Eigen::RowVectorXd resid = mlp_forward(net, qin, tape).row(0) - y;
      total += resid.squaredNorm() / n;
      auto g = mlp_backward(net, tape, (2.0 / n) * resid);
      adam_step(net.params(), g.params, c == 0 ? critic1_opt_ : critic2_opt_);
    }
    return 0.5 * total;
  }

  /// Loss and parameter gradient of mean(alpha log pi - min_c Q_c) for a
  /// fixed noise draw.
  std::pair<double, Eigen::VectorXd> actor_loss_and_gradient(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& noise) const {
    const auto a = static_cast<Eigen::Index>(ad_);
    const auto n = obs.cols();
    MlpTape tape;
    const Eigen::MatrixXd out = mlp_forward(actor_, obs, tape);
    const Eigen::MatrixXd mean = out.topRows(a);
    const Eigen::MatrixXd raw_ls = out.bottomRows(a);
    const Eigen::MatrixXd ls = raw_ls.cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
    const Eigen::ArrayXXd sigma = ls.array().exp();
    const Eigen::ArrayXXd u = mean.array() + sigma * noise.array();
    const Eigen::ArrayXXd t = u.tanh();
    const Eigen::ArrayXXd one_m_t2 = 1.0 - t.square();
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const Eigen::RowVectorXd log_prob =
        (-0.5 * noise.array().square() - ls.array() - half_log_2pi - (one_m_t2 + kSquashEps).log()).matrix().colwise().sum();

    const Eigen::MatrixXd qin = critic_input(obs, t.matrix());
    MlpTape t1, t2;
    const Eigen::RowVectorXd q1 = mlp_forward(critic1_, qin, t1).row(0);
    const Eigen::RowVectorXd q2 = mlp_forward(critic2_, qin, t2).row(0);
    Eigen::RowVectorXd m1(n), m2(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      m1[j] = q1[j] <= q2[j] ? 1.0 : 0.0;
      m2[j] = 1.0 - m1[j];
    }
    const Eigen::RowVectorXd qmin = q1.cwiseMin(q2);
    const double nn = static_cast<double>(n);
    const double loss = (cfg_.alpha * log_prob - qmin).sum() / nn;

    const Eigen::MatrixXd dq_da = mlp_backward(critic1_, t1, m1).input.bottomRows(a) +
                                  mlp_backward(critic2_, t2, m2).input.bottomRows(a);
    // d log pi / du through the squashing correction
    const Eigen::ArrayXXd c = 2.0 * t * one_m_t2 / (one_m_t2 + kSquashEps);
    const Eigen::ArrayXXd dq_du = dq_da.array() * one_m_t2;
    const Eigen::ArrayXXd d_mean = (cfg_.alpha * c - dq_du) / nn;
    Eigen::ArrayXXd d_ls = (cfg_.alpha * (c * sigma * noise.array() - 1.0) - dq_du * sigma * noise.array()) / nn;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < a; ++i)
        if (raw_ls(i, j) < cfg_.log_std_min || raw_ls(i, j) > cfg_.log_std_max) d_ls(i, j) = 0.0;
    Eigen::MatrixXd upstream(2 * a, n);
    upstream << d_mean.matrix(), d_ls.matrix();
    return {loss, mlp_backward(actor_, tape, upstream).params};
  }

  double actor_step(const ReplayBatch& b, Rng& rng) {
    const Eigen::MatrixXd obs = observation(b.states, b.goals);
    Eigen::MatrixXd noise(static_cast<Eigen::Index>(ad_), obs.cols());
    for (Eigen::Index j = 0; j < noise.cols(); ++j)
      for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, j) = gaussian(rng, 0.0, 1.0);
    auto [loss, grad] = actor_loss_and_gradient(obs, noise);
    adam_step(actor_.params(), grad, actor_opt_);
    return loss;
  }

  /// target <- (1 - tau) target + tau online
  void soft_update() {
    target1_.params() = (1.0 - cfg_.tau) * target1_.params() + cfg_.tau * critic1_.params();
    target2_.params() = (1.0 - cfg_.tau) * target2_.params() + cfg_.tau * critic2_.params();
  }

  PolicyDiagnostics update(const ReplayBatch& b, Rng& rng) {
    PolicyDiagnostics d;
    d.critic_loss = critic_step(b, targets(b, rng));
    d.actor_loss = actor_step(b, rng);
    soft_update();
    d.iterations = 1;
    return d;
  }

  Eigen::VectorXd parameters() const {
    Eigen::VectorXd p(actor_.params().size() + 2 * critic1_.params().size() + 2 * target1_.params().size());
    p << actor_.params(), critic1_.params(), critic2_.params(), target1_.params(), target2_.params();
    return p;
  }

 private:
  static constexpr double kSquashEps = 1e-6;

  Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const {
    Eigen::MatrixXd x(obs.rows() + actions.rows(), obs.cols());
    x << obs, actions;
    return x;
  }

  ActorCriticConfig cfg_;
  std::size_t sd_ = 0, gd_ = 0, ad_ = 2;
  double max_action_ = 1.0;
  Mlp actor_, critic1_, critic2_, target1_, target2_;
  AdamState actor_opt_, critic1_opt_, critic2_opt_;
};

struct Relabeled {
  StateVector state;
  Action action;
  StateVector next_state;
  Eigen::VectorXd goal;
  double reward = 0.0;
  bool done = false;
};

/// The episode's transitions with their own goals, each followed by k copies
/// whose goal is the achieved goal-space value at a uniformly drawn later
/// state of the same episode. Rewards and terminal flags are recomputed.
inline std::vector<Relabeled> her_relabel(const PolicyEpisode& ep, const std::vector<std::size_t>& indices, std::size_t k,
                                          double delta, Rng& rng) {
  if (ep.states.size() != ep.actions.size() + 1 || ep.goals.size() != ep.actions.size())
    throw std::invalid_argument("her_relabel: malformed episode");
  auto achieved = [&](std::size_t t) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) g[static_cast<Eigen::Index>(i)] = ep.states[t][static_cast<Eigen::Index>(indices[i])];
    return g;
  };
  std::vector<Relabeled> out;
  out.reserve(ep.size() * (k + 1));
  const std::size_t T = ep.size();
  for (std::size_t t = 0; t < T; ++t) {
    const double r = task_reward(ep.states[t + 1], indices, ep.goals[t]);
    out.push_back({ep.states[t], ep.actions[t], ep.states[t + 1], ep.goals[t], r, -r <= delta});
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t future = t + 1 + uniform_index(rng, T - t);
      Eigen::VectorXd g = achieved(future);
      const double rr = task_reward(ep.states[t + 1], indices, g);
      out.push_back({ep.states[t], ep.actions[t], ep.states[t + 1], std::move(g), rr, -rr <= delta});
    }
  }
  return out;
}

/// Learned controller of one task backed by ActorCritic and its own replay
/// buffer.
class SacPolicy final : public Policy {
 public:
  SacPolicy(std::size_t state_dim, std::vector<std::size_t> goal_indices, double max_force, double delta,
            const ActorCriticConfig& cfg, Rng& rng)
      : indices_(std::move(goal_indices)),
        delta_(delta),
        ac_(state_dim, indices_.size(), 2, max_force, cfg, rng),
        buffer_(state_dim, 2, indices_.size(), cfg.buffer_capacity) {}

  Action act(const StateVector& s, const Eigen::VectorXd& goal, bool explore, Rng& rng) const override {
    return ac_.act(s, goal, explore, rng);
  }

  void observe(const PolicyEpisode& ep, Rng& rng) override {
    for (const auto& tr : her_relabel(ep, indices_, ac_.config().her ? ac_.config().her_k : 0, delta_, rng))
      buffer_.add(tr.state, tr.action, tr.reward, tr.next_state, tr.goal, tr.done);
  }

  PolicyDiagnostics train(std::size_t iterations, Rng& rng) override {
    PolicyDiagnostics total;
    if (buffer_.size() < ac_.config().batch_size) return total;
    for (std::size_t i = 0; i < iterations; ++i) {
      const auto d = ac_.update(buffer_.sample(ac_.config().batch_size, rng), rng);
      total.critic_loss += d.critic_loss;
      total.actor_loss += d.actor_loss;
      ++total.iterations;
    }
    if (total.iterations) {
      total.critic_loss /= static_cast<double>(total.iterations);
      total.actor_loss /= static_cast<double>(total.iterations);
    }
    return total;
  }

  bool learns() const override { return true; }
  Eigen::VectorXd parameters() const override { return ac_.parameters(); }

  const ActorCritic& model() const { return ac_; }
  ActorCritic& model() { return ac_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  std::vector<std::size_t> indices_;
  double delta_;
  ActorCritic ac_;
  ReplayBuffer buffer_;
};

}  // namespace cwyc
