// combandit — experiment harness for multiple-play bandits with partial
// feedback. Three subcommands:
//
//   run       one policy x one strategy, full report
//   grid      policy x strategy sweep (defaults to every policy and strategy)
//   validate  dry-run the configuration and environment loading
//
// Configuration comes from a flat key=value file; every key can be overridden
// on the command line with --set key=value, and the most common experiment
// knobs also have dedicated flags. Command-line values win over the file;
// dedicated flags win over --set.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "combandit/combandit.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string policy;
  std::string strategy;
  std::string k;
  std::string psi_max;
  std::string horizon;
  std::string runs;
  std::string seed;
  std::string out;
  bool round_log = false;
};

void add_common_options(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment configuration file")
      ->required();
  cmd->add_option("--set", args.sets,
                  "override any config key as key=value (repeatable)")
      ->type_size(1);
  cmd->add_option("--policy", args.policy,
                  "policy name(s), comma separated (overrides policy.names)");
  cmd->add_option("--strategy", args.strategy,
                  "feedback strategy name(s), comma separated");
  cmd->add_option("--k", args.k, "arms recommended per round");
  cmd->add_option("--psi-max", args.psi_max, "patience cap for partial feedback");
  cmd->add_option("--horizon", args.horizon, "rounds per run");
  cmd->add_option("--runs", args.runs, "independent replications");
  cmd->add_option("--seed", args.seed, "base seed for the whole experiment");
  cmd->add_option("--out", args.out, "output directory for summary and logs");
  cmd->add_flag("--round-log", args.round_log,
                "write one tab-separated log row per round (needs --out)");
}

combandit::ExperimentConfig resolve_config(const CliArgs& args) {
  combandit::ExperimentConfig config = combandit::load_config_file(args.config_path);
  for (const std::string& entry : args.sets) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + entry + "'");
    combandit::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  const auto apply_if = [&config](const char* key, const std::string& value) {
    if (!value.empty()) combandit::apply_config_entry(config, key, value);
  };
  apply_if("policy.names", args.policy);
  apply_if("strategy.names", args.strategy);
  apply_if("experiment.k", args.k);
  apply_if("experiment.psi_max", args.psi_max);
  apply_if("experiment.horizon", args.horizon);
  apply_if("experiment.runs", args.runs);
  apply_if("experiment.seed", args.seed);
  apply_if("output.dir", args.out);
  if (args.round_log)
    combandit::apply_config_entry(config, "output.round_log", "true");
  return config;
}

void fill_grid_defaults(combandit::ExperimentConfig& config) {
  if (config.policies.empty())
    config.policies = {"epsilon-greedy", "ts", "ucb1", "ucb2", "linucb", "lints"};
  if (config.strategies.empty())
    config.strategies = {combandit::StrategyKind::Bandit,
                         combandit::StrategyKind::SemiBandit,
                         combandit::StrategyKind::PbsbRe,
                         combandit::StrategyKind::PbsbOe,
                         combandit::StrategyKind::PbsbRd};
}

int execute_experiment(const combandit::ExperimentConfig& config) {
  const combandit::AggregateReport report = combandit::run_experiment(config);
  const std::string text = combandit::render_report(report, config);
  std::cout << text;
  if (!config.out_dir.empty()) {
    const std::filesystem::path file =
        std::filesystem::path(config.out_dir) / "summary.txt";
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
    if (!out.good()) throw std::runtime_error("failed writing " + file.string());
  }
  return 0;
}

int run_validate(const CliArgs& args) {
  combandit::ExperimentConfig config = resolve_config(args);
  fill_grid_defaults(config);  // validate the config as grid would execute it
  const auto env = combandit::make_environment(config.env);
  combandit::validate_config(config, *env);
  const auto& meta = env->metadata();
  std::cout << "config ok\n";
  std::cout << "env.kind=" << meta.kind << " arms=" << meta.arm_count
            << " context_dim=" << meta.context_dim << " rows=" << meta.row_count
            << "\n";
  std::cout << "cells=" << config.policies.size() * config.strategies.size()
            << " runs=" << config.runs << " horizon=" << config.horizon
            << " k=" << config.k << " psi_max=" << config.resolved_psi_max()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiple-play bandit experiments with partial user feedback"};
  app.require_subcommand(1);

  CliArgs args;
  CLI::App* cmd_run =
      app.add_subcommand("run", "execute one policy/strategy cell and report");
  CLI::App* cmd_grid =
      app.add_subcommand("grid", "sweep the policy x strategy grid and report");
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "check the config and environment, run nothing");
  add_common_options(cmd_run, args);
  add_common_options(cmd_grid, args);
  add_common_options(cmd_validate, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_validate->parsed()) return run_validate(args);
    combandit::ExperimentConfig config = resolve_config(args);
    if (cmd_run->parsed()) {
      if (config.policies.size() != 1 || config.strategies.size() != 1)
        throw std::invalid_argument(
            "run expects exactly one policy and one strategy after overrides "
            "(use the grid subcommand for sweeps)");
    } else {
      fill_grid_defaults(config);
    }
    return execute_experiment(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
