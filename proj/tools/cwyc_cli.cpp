#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cwyc/cwyc.hpp"

namespace {

cwyc::ExperimentConfig build_config(const std::string& profile, const std::string& config_file, const std::string& ablation,
                                    const std::string& oracle) {
  cwyc::ExperimentConfig cfg = cwyc::profile_config(profile);
  if (!config_file.empty()) cfg = cwyc::merge_config(cfg, cwyc::load_json_file(config_file));
  if (ablation == "no_surprise") cfg.no_surprise = true;
  else if (ablation == "uniform_tasks") cfg.uniform_tasks = true;
  if (oracle == "graph" || oracle == "full") cfg.oracle_graph = true;
  if (oracle == "goals" || oracle == "full") cfg.oracle_goals = true;
  if (oracle == "full") cfg.pd_oracle = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curiosity-driven hierarchical agent in a 2D manipulation arena"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Train an agent and write metrics");
  std::string config_file, profile = "desk", ablation = "none", oracle = "none", out = "run_out";
  std::uint64_t seed = 0;
  std::size_t workers = 0, epochs = 0;
  std::uint64_t max_steps = 0;
  bool rollouts = false, quiet = false;
  run->add_option("--config", config_file, "JSON file overriding profile settings")->check(CLI::ExistingFile);
  run->add_option("--profile", profile, "Preset")->check(CLI::IsMember({"desk", "paper"}));
  run->add_option("--ablation", ablation, "Ablation")->check(CLI::IsMember({"none", "no_surprise", "uniform_tasks"}));
  run->add_option("--oracle", oracle, "Oracle components")->check(CLI::IsMember({"none", "graph", "goals", "full"}));
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--workers", workers, "Parallel rollout workers (default from profile)");
  run->add_option("--epochs", epochs, "Epoch cap (default from profile)");
  run->add_option("--max-steps", max_steps, "Environment step budget (default from profile)");
  run->add_option("--out", out, "Output directory");
  run->add_flag("--rollouts", rollouts, "Also write rollouts.jsonl");
  run->add_flag("--quiet", quiet, "No per-epoch progress lines");

  auto* show = app.add_subcommand("config", "Print the resolved configuration as JSON");
  std::string show_profile = "desk", show_file;
  show->add_option("--profile", show_profile, "Preset")->check(CLI::IsMember({"desk", "paper"}));
  show->add_option("--config", show_file, "JSON override file")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (show->parsed()) {
      auto cfg = build_config(show_profile, show_file, "none", "none");
      std::cout << cwyc::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    auto cfg = build_config(profile, config_file, ablation, oracle);
    cfg.seed = seed;
    if (workers) cfg.workers = workers;
    if (epochs) cfg.epochs = epochs;
    if (max_steps) cfg.max_env_steps = max_steps;
    if (rollouts) cfg.write_rollouts = true;
    cfg.validate();

    cwyc::ExperimentHooks hooks;
    if (!quiet)
      hooks.on_epoch = [](const cwyc::MetricsRow& m) {
        std::cerr << "epoch " << m.epoch << "  steps " << m.env_steps;
        if (m.competence) std::cerr << "  competence " << *m.competence;
        std::cerr << "  graph " << (m.graph_recovered ? "ok" : "-") << '\n';
      };
    const auto result = cwyc::run_experiment(cfg, out, hooks);
    std::cout << "epochs " << result.metrics.size() << "  env_steps " << result.agent->env_steps << "  competence "
              << result.final_competence() << "  output " << out << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
