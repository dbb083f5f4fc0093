#pragma once

// Epoch loop: parallel rollouts on a frozen snapshot, training at the
// barrier, then metrics and dumps.
//
// metrics.csv columns, in order:
//   epoch, env_steps, competence,
//   sr_<task>..., rho_<task>..., q_<task>..., sel_<task>...,
//   graph_recovered, fm_loss
// competence is the latest evaluation sweep (empty before the first one).
//
// eval.csv columns: epoch, env_steps, competence, eval_<task>...

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwyc/orchestrator/agent.hpp"
#include "cwyc/orchestrator/config.hpp"
#include "cwyc/orchestrator/rollout.hpp"
#include "cwyc/orchestrator/train_phase.hpp"

namespace cwyc {

struct MetricsRow {
  std::size_t epoch = 0;
  std::uint64_t env_steps = 0;
  std::optional<double> competence;
  std::vector<double> sr, rho, q;
  std::vector<std::uint64_t> selections;
  bool graph_recovered = false;
  double fm_loss = 0.0;
};

struct EvalRow {
  std::size_t epoch = 0;
  std::uint64_t env_steps = 0;
  double competence = 0.0;
  std::vector<double> success;
};

struct ExperimentResult {
  std::vector<MetricsRow> metrics;
  std::vector<EvalRow> evals;
  std::unique_ptr<Agent> agent;

  /// First epoch from which the graph stays recovered until the end.
  std::optional<std::size_t> graph_recovered_epoch() const {
    std::optional<std::size_t> first;
    for (const auto& m : metrics) {
      if (!m.graph_recovered) first.reset();
      else if (!first) first = m.epoch;
    }
    return first;
  }
  /// Env steps at the first evaluation reaching `level`.
  std::optional<std::uint64_t> steps_to_competence(double level) const {
    for (const auto& e : evals)
      if (e.competence >= level) return e.env_steps;
    return std::nullopt;
  }
  double final_competence() const { return evals.empty() ? 0.0 : evals.back().competence; }
};

struct ExperimentHooks {
  std::function<void(const MetricsRow&)> on_epoch;
};

inline std::string metrics_header(const GoalSpaceSpec& spaces) {
  std::ostringstream h;
  h << "epoch,env_steps,competence";
  for (const char* p : {"sr_", "rho_", "q_", "sel_"})
    for (const auto& t : spaces.tasks) h << ',' << p << t.name;
  h << ",graph_recovered,fm_loss";
  return h.str();
}

inline std::string format_row(const MetricsRow& m) {
  std::ostringstream o;
  o << std::setprecision(10) << m.epoch << ',' << m.env_steps << ',';
  if (m.competence) o << *m.competence;
  for (double v : m.sr) o << ',' << v;
  for (double v : m.rho) o << ',' << v;
  for (double v : m.q) o << ',' << v;
  for (auto v : m.selections) o << ',' << v;
  o << ',' << (m.graph_recovered ? 1 : 0) << ',' << m.fm_loss;
  return o.str();
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                             const std::vector<std::string>& col_names, const std::vector<std::string>& row_names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(10);
  out << (row_names.empty() ? "" : "task");
  for (std::size_t c = 0; c < col_names.size(); ++c) out << (c || !row_names.empty() ? "," : "") << col_names[c];
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!row_names.empty()) out << row_names[static_cast<std::size_t>(r)] << ',';
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

inline void dump_task_graph(const Agent& a, const std::filesystem::path& path) {
  std::vector<std::string> cols{"S"}, rows;
  for (const auto& t : a.spaces.tasks) {
    cols.push_back(t.name);
    rows.push_back(t.name);
  }
  write_matrix_csv(path, a.graph.matrix(), cols, rows);
}

inline std::vector<std::string> state_labels(const ArenaConfig& arena) {
  std::vector<std::string> n{"agent_x", "agent_y"};
  for (const auto& o : arena.objects) {
    n.push_back(o.name + "_x");
    n.push_back(o.name + "_y");
  }
  n.push_back("agent_vx");
  n.push_back("agent_vy");
  for (const auto& o : arena.objects) n.push_back(o.name + "_flag");
  return n;
}

/// One file per instantiated transition and weight group:
/// <dir>/<to>_from_<from>_w{1,2,3}.csv
inline void dump_goal_nets(const Agent& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto labels = state_labels(a.cfg.arena);
  for (const auto& [key, e] : a.goals.entries()) {
    const auto w = GoalProposal::weight_magnitudes(e.net);
    for (int g = 0; g < 3; ++g) {
      const auto file = a.spaces[key.first].name + "_from_" + a.spaces[key.second].name + "_w" + std::to_string(g + 1) + ".csv";
      write_matrix_csv(dir / file, w[static_cast<std::size_t>(g)], labels, labels);
    }
  }
}

inline nlohmann::json rollout_json(const RolloutRecord& r, std::size_t epoch, std::size_t index, const GoalSpaceSpec& spaces) {
  using nlohmann::json;
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j;
  j["epoch"] = epoch;
  j["index"] = index;
  j["seed"] = r.seed;
  if (!r.error.empty()) {
    j["error"] = r.error;
    return j;
  }
  j["final_task"] = spaces[r.final_task].name;
  json chain = json::array();
  for (auto c : r.chain) chain.push_back(spaces[c].name);
  j["chain"] = chain;
  j["final_goal"] = vec(r.final_goal);
  j["final_success"] = r.final_success;
  json legs = json::array();
  for (const auto& l : r.legs)
    legs.push_back({{"task", spaces[l.task].name},
                    {"predecessor", l.predecessor == kStart ? std::string("S") : spaces[static_cast<std::size_t>(l.predecessor)].name},
                    {"start", l.start},
                    {"end", l.end},
                    {"outcome", to_string(l.outcome)}});
  j["legs"] = legs;
  json sw = json::array();
  for (const auto& s : r.switches)
    sw.push_back({{"step", s.step}, {"from", spaces[s.from].name}, {"to", spaces[s.to].name}, {"state", vec(s.state)}});
  j["switches"] = sw;
  json steps = json::array();
  for (std::size_t t = 0; t < r.steps(); ++t)
    steps.push_back({{"state", vec(r.states[t])},
                     {"action", {r.actions[t][0], r.actions[t][1]}},
                     {"task", spaces[r.active[t]].name},
                     {"goal", vec(r.goals[t])}});
  j["steps"] = steps;
  j["last_state"] = vec(r.states.back());
  json surprise = json::object();
  for (std::size_t k = 0; k < r.surprise.size(); ++k) {
    std::vector<std::size_t> at;
    for (std::size_t t = 0; t < r.surprise[k].size(); ++t)
      if (r.surprise[k][t]) at.push_back(t);
    surprise[spaces[k].name] = at;
  }
  j["surprise_steps"] = surprise;
  return j;
}

/// Deterministic evaluation: every task as final task, greedy chains and
/// mean actions, no learning.
inline EvalRow evaluate(const Agent& a, std::size_t epoch) {
  const std::size_t K = a.num_tasks();
  const std::size_t n = a.cfg.eval_rollouts_per_task;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> tasks;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t r = 0; r < n; ++r) {
      seeds.push_back(derive_seed(a.cfg.seed, {0xe7a1ULL, epoch, k, r}));
      tasks.push_back(k);
    }
  EpisodeOptions opt;
  opt.evaluation = true;
  const auto recs = run_rollouts(a, seeds, a.cfg.workers, opt, &tasks);
  EvalRow row;
  row.epoch = epoch;
  row.env_steps = a.env_steps;
  row.success.assign(K, 0.0);
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (recs[i].final_success) row.success[tasks[i]] += 1.0 / static_cast<double>(n);
  for (double s : row.success) row.competence += s / static_cast<double>(K);
  return row;
}

/// Runs the configured number of epochs (or until the step budget is used)
/// and writes all artifacts to `out_dir` when it is non-empty.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {},
                                       const ExperimentHooks& hooks = {}) {
  namespace fs = std::filesystem;
  ExperimentResult result;
  result.agent = make_agent(cfg);
  Agent& a = *result.agent;
  const std::size_t K = a.num_tasks();

  std::ofstream metrics, evals, rollouts;
  auto open = [](std::ofstream& f, const fs::path& p) {
    f.open(p);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  };
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream resolved;
    open(resolved, out_dir / "config_resolved.json");
    resolved << to_json(cfg).dump(2) << '\n';
    open(metrics, out_dir / "metrics.csv");
    metrics << metrics_header(a.spaces) << '\n';
    open(evals, out_dir / "eval.csv");
    evals << "epoch,env_steps,competence";
    for (const auto& t : a.spaces.tasks) evals << ",eval_" << t.name;
    evals << '\n';
    if (cfg.write_rollouts) open(rollouts, out_dir / "rollouts.jsonl");
  }

  std::optional<double> competence;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_env_steps && a.env_steps >= cfg.max_env_steps) break;
    std::vector<std::uint64_t> seeds(cfg.rollouts_per_epoch);
    for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = derive_seed(cfg.seed, {0x7011ULL, epoch, r});

    const std::uint64_t before = snapshot_hash(a);
    auto records = run_rollouts(a, seeds, cfg.workers);
    if (snapshot_hash(a) != before) throw std::logic_error("rollout phase modified learned state");

    MetricsRow row;
    row.epoch = epoch;
    row.selections.assign(K, 0);
    for (const auto& r : records)
      if (r.error.empty()) ++row.selections[r.final_task];

    train_phase(a, records);

    if (cfg.eval_every && ((epoch + 1) % cfg.eval_every == 0)) {
      EvalRow e = evaluate(a, epoch);
      competence = e.competence;
      if (evals.is_open()) {
        evals << epoch << ',' << e.env_steps << ',' << std::setprecision(10) << e.competence;
        for (double s : e.success) evals << ',' << s;
        evals << '\n';
        evals.flush();
      }
      result.evals.push_back(std::move(e));
    }

    row.env_steps = a.env_steps;
    row.competence = competence;
    for (std::size_t k = 0; k < K; ++k) {
      row.sr.push_back(a.stats.success_rate(k));
      row.rho.push_back(a.stats.progress(k));
      row.q.push_back(a.bandit.value(k));
    }
    row.graph_recovered = graph_recovered(a.graph, cfg.arena);
    row.fm_loss = a.fm_loss;

    if (!out_dir.empty()) {
      metrics << format_row(row) << '\n';
      metrics.flush();
      if (cfg.dump_every && (epoch % cfg.dump_every == 0)) {
        dump_task_graph(a, out_dir / ("B_epoch_" + std::to_string(epoch) + ".csv"));
        dump_goal_nets(a, out_dir / ("gnet_epoch_" + std::to_string(epoch)));
      }
      if (rollouts.is_open())
        for (std::size_t r = 0; r < records.size(); ++r) rollouts << rollout_json(records[r], epoch, r, a.spaces).dump() << '\n';
    }
    if (hooks.on_epoch) hooks.on_epoch(row);
    result.metrics.push_back(std::move(row));
  }
  return result;
}

}  // namespace cwyc
