#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace cwyc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(std::size_t num_params, AdamConfig cfg)
      : config(cfg),
        first_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params))),
        second_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params))) {}
};

/// One bias-corrected Adam step, minimizing along `grads`.
inline void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.first_moment.size())
    throw std::invalid_argument("adam_step: parameter/gradient/moment sizes differ");
  const auto& c = st.config;
  ++st.step;
  st.first_moment = c.beta1 * st.first_moment + (1.0 - c.beta1) * grads;
  st.second_moment = c.beta2 * st.second_moment + (1.0 - c.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(st.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  params.array() -= c.learning_rate * (st.first_moment.array() / corr1) /
                    ((st.second_moment.array() / corr2).sqrt() + c.epsilon);
}

}  // namespace cwyc
