#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cwyc/control/actor_critic.hpp"
#include "cwyc/control/policy.hpp"
#include "cwyc/curriculum/curriculum.hpp"
#include "cwyc/env/playground.hpp"
#include "cwyc/goal_proposal/goal_proposal.hpp"
#include "cwyc/task_graph/task_graph.hpp"
#include "cwyc/world_model/forward_model.hpp"
#include "cwyc/world_model/surprise.hpp"

namespace cwyc {

struct ExperimentConfig {
  std::string profile = "desk";
  std::uint64_t seed = 0;
  std::size_t workers = 5;
  std::size_t epochs = 250;
  std::uint64_t max_env_steps = 0;  // 0 = no step budget, run all epochs
  std::size_t rollouts_per_epoch = 5;
  int leg_budget = 0;                // steps per non-final chain element; 0 = t_max / chain length

  ArenaConfig arena = ArenaConfig::desk();
  ForwardModelConfig forward_model;
  SurpriseConfig surprise;
  std::size_t success_window = 10;
  BanditConfig bandit;
  TaskGraphConfig task_graph;
  GoalProposalConfig goal_proposal;
  ActorCriticConfig policy;
  PdConfig pd;

  bool no_surprise = false;
  bool uniform_tasks = false;
  bool oracle_graph = false;
  bool oracle_goals = false;
  bool pd_oracle = false;

  std::size_t eval_every = 5;              // epochs between evaluation sweeps; 0 disables
  std::size_t eval_rollouts_per_task = 10;
  std::size_t dump_every = 10;             // epochs between B / gnet dumps; 0 disables
  bool write_rollouts = false;

  void validate() const {
    arena.validate();
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (rollouts_per_epoch < 1) throw std::invalid_argument("config: rollouts_per_epoch must be >= 1");
    if (success_window < 1) throw std::invalid_argument("config: success_window must be >= 1");
    if (goal_proposal.refresh_every < 1) throw std::invalid_argument("config: goal refresh interval must be >= 1");
    if (leg_budget < 0) throw std::invalid_argument("config: leg_budget must be >= 0");
    if (arena.objects.empty()) throw std::invalid_argument("config: the arena needs at least one object");
  }
};

/// Scaled-down arena (10 x 10, T_max 400) with small networks, sized for a
/// single core.
inline ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.profile = "desk";
  c.arena = ArenaConfig::desk();
  c.epochs = 1000;
  c.max_env_steps = 500000;
  c.forward_model.layer_size = 64;
  c.forward_model.num_layers = 3;
  c.forward_model.learning_rate = 1e-3;
  c.forward_model.buffer_capacity = 100000;
  c.goal_proposal.net.learning_rate = 3e-3;
  c.policy.hidden = {64, 64};
  c.policy.actor_lr = 1e-3;
  c.policy.critic_lr = 1e-3;
  c.policy.tau = 0.01;
  c.policy.alpha = 0.05;
  c.policy.reward_scale = 0.04;
  c.policy.discount = 0.95;
  c.policy.buffer_capacity = 200000;
  c.policy.train_iterations = 200;
  c.policy.her = true;
  c.policy.input_scale = 1.0 / c.arena.half_size;
  return c;
}

/// Full-size settings: 20 x 20 arena, T_max 1600, 9 x 100 tanh forward model.
inline ExperimentConfig paper_profile() {
  ExperimentConfig c;
  c.profile = "paper";
  c.arena = ArenaConfig::paper();
  c.epochs = 2000;
  c.max_env_steps = 10000000;
  c.policy.input_scale = 1.0 / c.arena.half_size;
  c.eval_every = 20;
  c.dump_every = 1;
  return c;
}

inline ExperimentConfig profile_config(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (expected desk or paper)");
}

using nlohmann::json;

inline json to_json(const ExperimentConfig& c) {
  json objects = json::array();
  for (const auto& o : c.arena.objects) objects.push_back({{"kind", to_string(o.kind)}, {"name", o.name}});
  const auto& a = c.arena;
  const auto& fm = c.forward_model;
  const auto& gp = c.goal_proposal;
  const auto& p = c.policy;
  return json{
      {"profile", c.profile},
      {"seed", c.seed},
      {"workers", c.workers},
      {"epochs", c.epochs},
      {"max_env_steps", c.max_env_steps},
      {"rollouts_per_epoch", c.rollouts_per_epoch},
      {"leg_budget", c.leg_budget},
      {"arena",
       {{"half_size", a.half_size},
        {"dt", a.dt},
        {"friction", a.friction},
        {"mass", a.mass},
        {"max_force", a.max_force},
        {"pickup_radius", a.pickup_radius},
        {"random_walk_sigma", a.random_walk_sigma},
        {"half_light_probability", a.half_light_probability},
        {"t_max", a.t_max},
        {"delta", a.delta},
        {"objects", objects}}},
      {"forward_model",
       {{"layer_size", fm.layer_size},
        {"num_layers", fm.num_layers},
        {"activation", to_string(fm.activation)},
        {"learning_rate", fm.learning_rate},
        {"batch_size", fm.batch_size},
        {"train_iterations", fm.train_iterations},
        {"buffer_capacity", fm.buffer_capacity}}},
      {"surprise", {{"theta", c.surprise.theta}, {"history_weight", c.surprise.history_weight}, {"warmup", c.surprise.warmup}}},
      {"curriculum",
       {{"success_window", c.success_window},
        {"learning_rate", c.bandit.learning_rate},
        {"surprise_weight", c.bandit.surprise_weight},
        {"epsilon", c.bandit.epsilon},
        {"q_floor", c.bandit.q_floor}}},
      {"task_graph",
       {{"surprise_weight", c.task_graph.surprise_weight},
        {"window", c.task_graph.window},
        {"surprise_history", c.task_graph.surprise_history},
        {"epsilon", c.task_graph.epsilon}}},
      {"goal_proposal",
       {{"learning_rate", gp.net.learning_rate},
        {"batch_size", gp.net.batch_size},
        {"train_iterations", gp.net.train_iterations},
        {"gamma_init", gp.net.gamma_init},
        {"gamma_trainable", gp.net.gamma_trainable},
        {"init_scale", gp.net.init_scale},
        {"ridge", gp.net.ridge},
        {"positive_capacity", gp.positive_capacity},
        {"negative_capacity", gp.negative_capacity},
        {"refresh_every", gp.refresh_every}}},
      {"policy",
       {{"hidden", p.hidden},
        {"activation", to_string(p.activation)},
        {"actor_lr", p.actor_lr},
        {"critic_lr", p.critic_lr},
        {"discount", p.discount},
        {"tau", p.tau},
        {"alpha", p.alpha},
        {"reward_scale", p.reward_scale},
        {"batch_size", p.batch_size},
        {"train_iterations", p.train_iterations},
        {"buffer_capacity", p.buffer_capacity},
        {"input_scale", p.input_scale},
        {"log_std_min", p.log_std_min},
        {"log_std_max", p.log_std_max},
        {"her", p.her},
        {"her_k", p.her_k}}},
      {"pd", {{"kp", c.pd.kp}, {"kd", c.pd.kd}}},
      {"ablation", {{"no_surprise", c.no_surprise}, {"uniform_tasks", c.uniform_tasks}}},
      {"oracle", {{"graph", c.oracle_graph}, {"goals", c.oracle_goals}, {"pd", c.pd_oracle}}},
      {"eval", {{"every", c.eval_every}, {"rollouts_per_task", c.eval_rollouts_per_task}}},
      {"dump_every", c.dump_every},
      {"write_rollouts", c.write_rollouts},
  };
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.profile = j.at("profile").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.workers = j.at("workers").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.max_env_steps = j.at("max_env_steps").get<std::uint64_t>();
  c.rollouts_per_epoch = j.at("rollouts_per_epoch").get<std::size_t>();
  c.leg_budget = j.at("leg_budget").get<int>();

  const auto& a = j.at("arena");
  c.arena.half_size = a.at("half_size").get<double>();
  c.arena.dt = a.at("dt").get<double>();
  c.arena.friction = a.at("friction").get<double>();
  c.arena.mass = a.at("mass").get<double>();
  c.arena.max_force = a.at("max_force").get<double>();
  c.arena.pickup_radius = a.at("pickup_radius").get<double>();
  c.arena.random_walk_sigma = a.at("random_walk_sigma").get<double>();
  c.arena.half_light_probability = a.at("half_light_probability").get<double>();
  c.arena.t_max = a.at("t_max").get<int>();
  c.arena.delta = a.at("delta").get<double>();
  c.arena.objects.clear();
  for (const auto& o : a.at("objects"))
    c.arena.objects.push_back({object_kind_from_string(o.at("kind").get<std::string>()), o.at("name").get<std::string>()});

  const auto& fm = j.at("forward_model");
  c.forward_model.layer_size = fm.at("layer_size").get<std::size_t>();
  c.forward_model.num_layers = fm.at("num_layers").get<std::size_t>();
  c.forward_model.activation = activation_from_string(fm.at("activation").get<std::string>());
  c.forward_model.learning_rate = fm.at("learning_rate").get<double>();
  c.forward_model.batch_size = fm.at("batch_size").get<std::size_t>();
  c.forward_model.train_iterations = fm.at("train_iterations").get<std::size_t>();
  c.forward_model.buffer_capacity = fm.at("buffer_capacity").get<std::size_t>();

  const auto& s = j.at("surprise");
  c.surprise.theta = s.at("theta").get<double>();
  c.surprise.history_weight = s.at("history_weight").get<double>();
  c.surprise.warmup = s.at("warmup").get<std::uint64_t>();

  const auto& cu = j.at("curriculum");
  c.success_window = cu.at("success_window").get<std::size_t>();
  c.bandit.learning_rate = cu.at("learning_rate").get<double>();
  c.bandit.surprise_weight = cu.at("surprise_weight").get<double>();
  c.bandit.epsilon = cu.at("epsilon").get<double>();
  c.bandit.q_floor = cu.at("q_floor").get<double>();

  const auto& tg = j.at("task_graph");
  c.task_graph.surprise_weight = tg.at("surprise_weight").get<double>();
  c.task_graph.window = tg.at("window").get<std::size_t>();
  c.task_graph.surprise_history = tg.at("surprise_history").get<double>();
  c.task_graph.epsilon = tg.at("epsilon").get<double>();
  c.task_graph.t_max = c.arena.t_max;

  const auto& gp = j.at("goal_proposal");
  c.goal_proposal.net.learning_rate = gp.at("learning_rate").get<double>();
  c.goal_proposal.net.batch_size = gp.at("batch_size").get<std::size_t>();
  c.goal_proposal.net.train_iterations = gp.at("train_iterations").get<std::size_t>();
  c.goal_proposal.net.gamma_init = gp.at("gamma_init").get<double>();
  c.goal_proposal.net.gamma_trainable = gp.at("gamma_trainable").get<bool>();
  c.goal_proposal.net.init_scale = gp.at("init_scale").get<double>();
  c.goal_proposal.net.ridge = gp.at("ridge").get<double>();
  c.goal_proposal.positive_capacity = gp.at("positive_capacity").get<std::size_t>();
  c.goal_proposal.negative_capacity = gp.at("negative_capacity").get<std::size_t>();
  c.goal_proposal.refresh_every = gp.at("refresh_every").get<std::size_t>();

  const auto& p = j.at("policy");
  c.policy.hidden = p.at("hidden").get<std::vector<std::size_t>>();
  c.policy.activation = activation_from_string(p.at("activation").get<std::string>());
  c.policy.actor_lr = p.at("actor_lr").get<double>();
  c.policy.critic_lr = p.at("critic_lr").get<double>();
  c.policy.discount = p.at("discount").get<double>();
  c.policy.tau = p.at("tau").get<double>();
  c.policy.alpha = p.at("alpha").get<double>();
  c.policy.reward_scale = p.at("reward_scale").get<double>();
  c.policy.batch_size = p.at("batch_size").get<std::size_t>();
  c.policy.train_iterations = p.at("train_iterations").get<std::size_t>();
  c.policy.buffer_capacity = p.at("buffer_capacity").get<std::size_t>();
  c.policy.input_scale = p.at("input_scale").get<double>();
  c.policy.log_std_min = p.at("log_std_min").get<double>();
  c.policy.log_std_max = p.at("log_std_max").get<double>();
  c.policy.her = p.at("her").get<bool>();
  c.policy.her_k = p.at("her_k").get<std::size_t>();

  c.pd.kp = j.at("pd").at("kp").get<double>();
  c.pd.kd = j.at("pd").at("kd").get<double>();
  c.no_surprise = j.at("ablation").at("no_surprise").get<bool>();
  c.uniform_tasks = j.at("ablation").at("uniform_tasks").get<bool>();
  c.oracle_graph = j.at("oracle").at("graph").get<bool>();
  c.oracle_goals = j.at("oracle").at("goals").get<bool>();
  c.pd_oracle = j.at("oracle").at("pd").get<bool>();
  c.eval_every = j.at("eval").at("every").get<std::size_t>();
  c.eval_rollouts_per_task = j.at("eval").at("rollouts_per_task").get<std::size_t>();
  c.dump_every = j.at("dump_every").get<std::size_t>();
  c.write_rollouts = j.at("write_rollouts").get<bool>();
  c.validate();
  return c;
}

namespace detail {
inline void check_known_keys(const json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) return;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string where = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw std::invalid_argument("config: unknown key '" + where + "'");
    if (base.at(it.key()).is_object()) check_known_keys(base.at(it.key()), it.value(), where);
  }
}
}  // namespace detail

/// Overlays `patch` on `base`. Every key in the patch must already exist.
inline ExperimentConfig merge_config(const ExperimentConfig& base, const json& patch) {
  json j = to_json(base);
  detail::check_known_keys(j, patch, "");
  j.merge_patch(patch);
  return config_from_json(j);
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file '" + path + "': " + e.what());
  }
}

}  // namespace cwyc
