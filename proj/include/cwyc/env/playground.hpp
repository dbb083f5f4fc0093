#pragma once

// 2D manipulation arena: a force-controlled point mass inside square walls and
// a set of objects with different controllability.
//
// Observation layout for d objects:
//   (x, y, o1_x, o1_y, ..., od_x, od_y, vx, vy, p1, ..., pd)
// where p_i is 1 while the agent possesses object i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwyc/numerics/rng.hpp"

namespace cwyc {

using StateVector = Eigen::VectorXd;
using Action = Eigen::Vector2d;

enum class ObjectKind { Static, Random, HalfLight, Tool, Heavy };

inline const char* to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::Static: return "static";
    case ObjectKind::Random: return "random";
    case ObjectKind::HalfLight: return "half_light";
    case ObjectKind::Tool: return "tool";
    case ObjectKind::Heavy: return "heavy";
  }
  return "static";
}

inline ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "static") return ObjectKind::Static;
  if (s == "random") return ObjectKind::Random;
  if (s == "half_light") return ObjectKind::HalfLight;
  if (s == "tool") return ObjectKind::Tool;
  if (s == "heavy") return ObjectKind::Heavy;
  throw std::invalid_argument("unknown object kind '" + s + "'");
}

struct ObjectSpec {
  ObjectKind kind = ObjectKind::Static;
  std::string name;
};

struct ArenaConfig {
  double half_size = 5.0;  // walls at +-half_size on both axes
  double dt = 0.1;
  double friction = 1.0;  // linear viscous drag coefficient
  double mass = 1.0;
  double max_force = 5.0;
  double pickup_radius = 1.2;
  double random_walk_sigma = 0.05;
  double half_light_probability = 0.5;
  int t_max = 400;
  double delta = 1.0;  // success threshold on the squared goal distance
  std::vector<ObjectSpec> objects;
  std::uint64_t seed = 0;

  /// 10 x 10 arena, T_max 400, objects: tool, heavy, 50% object, random.
  static ArenaConfig desk() {
    ArenaConfig c;
    c.objects = {{ObjectKind::Tool, "tool"},
                 {ObjectKind::Heavy, "heavy"},
                 {ObjectKind::HalfLight, "half_light"},
                 {ObjectKind::Random, "random"}};
    return c;
  }

  /// 20 x 20 arena, T_max 1600.
  static ArenaConfig paper() {
    ArenaConfig c = desk();
    c.half_size = 10.0;
    c.t_max = 1600;
    return c;
  }

  void validate() const {
    if (!(half_size > 0.0)) throw std::invalid_argument("arena: half_size must be > 0");
    if (!(pickup_radius > 0.0)) throw std::invalid_argument("arena: pickup_radius must be > 0");
    if (t_max < 0) throw std::invalid_argument("arena: t_max must be >= 0");
    if (!(dt > 0.0) || !(mass > 0.0)) throw std::invalid_argument("arena: dt and mass must be > 0");
    if (!(max_force > 0.0)) throw std::invalid_argument("arena: max_force must be > 0");
    if (!(delta > 0.0)) throw std::invalid_argument("arena: delta must be > 0");
  }
};

/// Index arithmetic for the flat observation vector.
struct StateLayout {
  std::size_t num_objects = 0;

  std::size_t dim() const { return 4 + 3 * num_objects; }
  std::size_t agent_pos() const { return 0; }
  std::size_t object_pos(std::size_t i) const { return 2 + 2 * i; }
  std::size_t velocity() const { return 2 + 2 * num_objects; }
  std::size_t flag(std::size_t i) const { return 4 + 2 * num_objects + i; }
  bool is_position(std::size_t idx) const { return idx < velocity(); }
};

/// Goal space of one task: a group of coordinates of the state vector.
struct GoalSpace {
  std::string name;
  std::vector<std::size_t> indices;
  int object = -1;  // -1 for the agent itself
};

struct GoalSpaceSpec {
  std::vector<GoalSpace> tasks;
  std::size_t state_dim = 0;

  std::size_t size() const { return tasks.size(); }
  const GoalSpace& operator[](std::size_t i) const { return tasks[i]; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i].name == name) return i;
    throw std::out_of_range("no task named '" + name + "'");
  }

  Eigen::VectorXd project(const StateVector& s, std::size_t task) const {
    const auto& idx = tasks[task].indices;
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = s[static_cast<Eigen::Index>(idx[k])];
    return out;
  }

  double squared_distance(const StateVector& s, std::size_t task, const Eigen::VectorXd& goal) const {
    return (project(s, task) - goal).squaredNorm();
  }

  /// Goal spaces must be disjoint and inside the state.
  void validate() const {
    std::vector<bool> used(state_dim, false);
    for (const auto& t : tasks)
      for (auto i : t.indices) {
        if (i >= state_dim) throw std::invalid_argument("goal space index out of range in task " + t.name);
        if (used[i]) throw std::invalid_argument("goal spaces overlap at index " + std::to_string(i));
        used[i] = true;
      }
  }
};

/// Task 0 is locomotion (agent position), task k >= 1 moves object k-1.
inline GoalSpaceSpec make_goal_spaces(const ArenaConfig& cfg) {
  StateLayout lay{cfg.objects.size()};
  GoalSpaceSpec spec;
  spec.state_dim = lay.dim();
  spec.tasks.push_back({"locomotion", {0, 1}, -1});
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    const auto base = lay.object_pos(i);
    spec.tasks.push_back({cfg.objects[i].name, {base, base + 1}, static_cast<int>(i)});
  }
  spec.validate();
  return spec;
}

/// Uniform goal for a positional task anywhere inside the walls.
inline Eigen::VectorXd goal_sample(const ArenaConfig& cfg, const GoalSpaceSpec& spaces, std::size_t task, Rng& rng) {
  if (task >= spaces.size()) throw std::out_of_range("goal_sample: invalid task");
  Eigen::VectorXd g(static_cast<Eigen::Index>(spaces[task].indices.size()));
  for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = uniform(rng, -cfg.half_size, cfg.half_size);
  return g;
}

inline Eigen::VectorXd goal_sample(const ArenaConfig& cfg, const GoalSpaceSpec& spaces, std::size_t task,
                                   std::uint64_t seed) {
  Rng rng(seed);
  return goal_sample(cfg, spaces, task, rng);
}

class Arena {
 public:
  explicit Arena(ArenaConfig cfg) : cfg_(std::move(cfg)), layout_{cfg_.objects.size()} {
    cfg_.validate();
    movable_.assign(cfg_.objects.size(), true);
    state_ = StateVector::Zero(static_cast<Eigen::Index>(layout_.dim()));
  }

  const ArenaConfig& config() const { return cfg_; }
  const StateLayout& layout() const { return layout_; }
  const StateVector& state() const { return state_; }
  int steps() const { return steps_; }

  /// Random arrangement: agent and objects uniform inside the walls, zero
  /// velocity, nothing possessed, and a fresh 50% coin for every HalfLight.
  const StateVector& reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_.setZero();
    state_[0] = uniform(rng_, -cfg_.half_size, cfg_.half_size);
    state_[1] = uniform(rng_, -cfg_.half_size, cfg_.half_size);
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i) {
      const auto p = idx(layout_.object_pos(i));
      state_[p] = uniform(rng_, -cfg_.half_size, cfg_.half_size);
      state_[p + 1] = uniform(rng_, -cfg_.half_size, cfg_.half_size);
    }
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i) {
      movable_[i] = cfg_.objects[i].kind == ObjectKind::HalfLight ? bernoulli(rng_, cfg_.half_light_probability)
                                                                    : cfg_.objects[i].kind != ObjectKind::Static &&
                                                                          cfg_.objects[i].kind != ObjectKind::Random;
    }
    steps_ = 0;
    return state_;
  }

  /// Overrides the full state (scripted scenarios). Positions are clamped
  /// into the walls and flags snapped to {0,1}.
  void set_state(const StateVector& s) {
    if (s.size() != state_.size()) throw std::invalid_argument("set_state: wrong state dimension");
    state_ = s;
    for (std::size_t i = 0; i < layout_.velocity(); ++i)
      state_[idx(i)] = std::clamp(state_[idx(i)], -cfg_.half_size, cfg_.half_size);
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i)
      state_[idx(layout_.flag(i))] = state_[idx(layout_.flag(i))] > 0.5 ? 1.0 : 0.0;
  }

  bool movable(std::size_t object) const { return movable_.at(object); }
  void set_movable(std::size_t object, bool m) { movable_.at(object) = m; }
  bool possessed(std::size_t object) const { return state_[idx(layout_.flag(object))] > 0.5; }

  /// Distance from the agent to an object.
  double agent_distance(std::size_t object) const {
    const auto p = idx(layout_.object_pos(object));
    return std::hypot(state_[0] - state_[p], state_[1] - state_[p + 1]);
  }

  const StateVector& step(const Action& action) {
    if (!std::isfinite(action[0]) || !std::isfinite(action[1]))
      throw std::invalid_argument("env_step: non-finite action");
    const double fx = std::clamp(action[0], -cfg_.max_force, cfg_.max_force);
    const double fy = std::clamp(action[1], -cfg_.max_force, cfg_.max_force);
    const auto v = idx(layout_.velocity());
    const double damp = 1.0 - cfg_.friction * cfg_.dt;
    state_[v] = damp * state_[v] + fx / cfg_.mass * cfg_.dt;
    state_[v + 1] = damp * state_[v + 1] + fy / cfg_.mass * cfg_.dt;
    for (int a = 0; a < 2; ++a) {
      double& pos = state_[a];
      pos += state_[v + a] * cfg_.dt;
      if (pos > cfg_.half_size || pos < -cfg_.half_size) {
        pos = std::clamp(pos, -cfg_.half_size, cfg_.half_size);
        state_[v + a] = 0.0;
      }
    }

    update_possession();

    for (std::size_t i = 0; i < cfg_.objects.size(); ++i) {
      const auto p = idx(layout_.object_pos(i));
      if (possessed(i)) {
        state_[p] = state_[0];
        state_[p + 1] = state_[1];
      } else if (cfg_.objects[i].kind == ObjectKind::Random) {
        for (int a = 0; a < 2; ++a) state_[p + a] = reflect(state_[p + a] + gaussian(rng_, 0.0, cfg_.random_walk_sigma));
      }
    }
    ++steps_;
    return state_;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  double reflect(double x) const {
    const double h = cfg_.half_size;
    if (x > h) x = 2.0 * h - x;
    if (x < -h) x = -2.0 * h - x;
    return std::clamp(x, -h, h);
  }

  bool tool_in_hand() const {
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i)
      if (cfg_.objects[i].kind == ObjectKind::Tool && possessed(i)) return true;
    return false;
  }

  void update_possession() {
    // Light objects first so that a tool grabbed this step already counts
    // for the heavy object.
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i) {
      const auto k = cfg_.objects[i].kind;
      const bool light = k == ObjectKind::Tool || (k == ObjectKind::HalfLight && movable_[i]);
      if (light && !possessed(i) && agent_distance(i) <= cfg_.pickup_radius) state_[idx(layout_.flag(i))] = 1.0;
    }
    if (!tool_in_hand()) return;
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i)
      if (cfg_.objects[i].kind == ObjectKind::Heavy && !possessed(i) && agent_distance(i) <= cfg_.pickup_radius)
        state_[idx(layout_.flag(i))] = 1.0;
  }

  ArenaConfig cfg_;
  StateLayout layout_;
  StateVector state_;
  std::vector<bool> movable_;
  Rng rng_;
  int steps_ = 0;
};

}  // namespace cwyc
