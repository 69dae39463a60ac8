#pragma once

// Experiment orchestration: flat key=value configuration, per-run seed
// derivation, the outer recommendation loop, multi-run replication (optionally
// concurrent), aggregation, the significance-test battery, and the
// fixed-format summary report.
//
// Determinism contract: a config executed twice — sequentially or under
// parallel replication — renders byte-identical reports. Everything that
// reaches the report flows through fixed printf formats, and aggregation
// always folds completed runs in run-index order.

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "combandit/combinatorial.hpp"
#include "combandit/core.hpp"
#include "combandit/environments.hpp"
#include "combandit/evaluation.hpp"
#include "combandit/feedback.hpp"
#include "combandit/policies.hpp"
#include "combandit/rng.hpp"

namespace combandit {

// ---- small utilities --------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

inline std::string format(const char* fmt, ...) {
  char buffer[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buffer, sizeof buffer, fmt, args);
  va_end(args);
  return buffer;
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

}  // namespace detail

// ---- configuration -----------------------------------------------------------

struct EnvConfig {
  std::string kind = "synthetic";
  std::vector<double> mu;        // synthetic arm success probabilities
  std::size_t context_dim = 0;   // synthetic context width (zero vector)
  std::string path;              // replay data file
  TableSchema table;             // classification schema
  RatingsSchema ratings;         // ratings schema
};

struct ExperimentConfig {
  std::uint64_t horizon = 10000;
  std::size_t k = 0;  // required; validated against the environment
  std::optional<std::uint64_t> psi_max;  // defaults to k when unset
  double delta = 0.01;
  std::size_t runs = 10;
  std::uint64_t base_seed = 1;
  bool common_draws = true;  // share env/patience streams across grid cells
  bool parallel = true;
  bool round_log = false;
  std::string out_dir;

  std::vector<std::string> policies;     // canonical names
  std::vector<StrategyKind> strategies;
  PolicyConfig policy;  // shared hyperparameters (name field ignored here)
  BanditRewardMode bandit_reward = BanditRewardMode::Normalized;
  EnvConfig env;

  std::uint64_t resolved_psi_max() const {
    return psi_max.value_or(static_cast<std::uint64_t>(k));
  }
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    if (!value.empty() && value[0] == '-')
      throw std::invalid_argument("negative");
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" +
                                value + "'");
  }
}

inline double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + value + "'");
  }
}

inline bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + value + "'");
}

inline std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> items;
  for (const auto& cell : split_line(value, ','))
    if (!cell.empty()) items.push_back(cell);
  return items;
}

inline char parse_delimiter(const std::string& value, const std::string& key) {
  if (value == "tab" || value == "\\t") return '\t';
  if (value == "space") return ' ';
  if (value.size() == 1) return value[0];
  throw std::invalid_argument("config: '" + key + "' expects a single character, 'tab' or 'space'");
}

inline std::vector<double> parse_double_list(const std::string& value,
                                             const std::string& key) {
  std::vector<double> out;
  for (const auto& cell : parse_list(value)) out.push_back(parse_double(cell, key));
  return out;
}

}  // namespace detail

// Applies one dotted key=value entry (used both by the file loader and by CLI
// overrides). Unknown keys are rejected.
inline void apply_config_entry(ExperimentConfig& config, const std::string& key,
                               const std::string& value) {
  using namespace detail;
  if (key == "experiment.horizon") {
    config.horizon = parse_u64(value, key);
  } else if (key == "experiment.k") {
    config.k = parse_u64(value, key);
  } else if (key == "experiment.psi_max") {
    config.psi_max = parse_u64(value, key);
  } else if (key == "experiment.delta") {
    config.delta = parse_double(value, key);
  } else if (key == "experiment.runs") {
    config.runs = parse_u64(value, key);
  } else if (key == "experiment.seed") {
    config.base_seed = parse_u64(value, key);
  } else if (key == "experiment.common_draws") {
    config.common_draws = parse_bool(value, key);
  } else if (key == "experiment.parallel") {
    config.parallel = parse_bool(value, key);
  } else if (key == "policy.name" || key == "policy.names") {
    config.policies.clear();
    for (const auto& name : parse_list(value))
      config.policies.push_back(canonical_policy_name(name));
    if (config.policies.empty())
      throw std::invalid_argument("config: '" + key + "' needs at least one name");
  } else if (key == "policy.epsilon") {
    config.policy.epsilon = parse_double(value, key);
  } else if (key == "policy.ucb2_alpha") {
    config.policy.ucb2_alpha = parse_double(value, key);
  } else if (key == "policy.lin_alpha") {
    config.policy.lin_alpha = parse_double(value, key);
  } else if (key == "policy.lin_v") {
    config.policy.lin_v = parse_double(value, key);
  } else if (key == "policy.ridge") {
    config.policy.ridge = parse_double(value, key);
  } else if (key == "strategy.name" || key == "strategy.names") {
    config.strategies.clear();
    for (const auto& name : parse_list(value))
      config.strategies.push_back(parse_strategy(name));
    if (config.strategies.empty())
      throw std::invalid_argument("config: '" + key + "' needs at least one name");
  } else if (key == "strategy.bandit_reward") {
    if (value == "normalized")
      config.bandit_reward = BanditRewardMode::Normalized;
    else if (value == "raw")
      config.bandit_reward = BanditRewardMode::Raw;
    else
      throw std::invalid_argument("config: strategy.bandit_reward expects 'normalized' or 'raw'");
  } else if (key == "env.kind") {
    if (value != "synthetic" && value != "classification" && value != "ratings")
      throw std::invalid_argument(
          "config: env.kind expects synthetic, classification or ratings");
    config.env.kind = value;
  } else if (key == "env.mu") {
    config.env.mu = parse_double_list(value, key);
  } else if (key == "env.context_dim") {
    config.env.context_dim = parse_u64(value, key);
  } else if (key == "env.path") {
    config.env.path = value;
  } else if (key == "env.delimiter") {
    const char d = parse_delimiter(value, key);
    config.env.table.delimiter = d;
    config.env.ratings.delimiter = d;
  } else if (key == "env.label_column") {
    config.env.table.label_column = value;
  } else if (key == "env.context_columns") {
    config.env.table.context_columns = parse_list(value);
  } else if (key == "env.user_column") {
    config.env.ratings.user_column = value;
  } else if (key == "env.item_column") {
    config.env.ratings.item_column = value;
  } else if (key == "env.rating_column") {
    config.env.ratings.rating_column = value;
  } else if (key == "env.rating_threshold") {
    config.env.ratings.threshold = parse_double(value, key);
  } else if (key == "env.user_context_path") {
    config.env.ratings.user_context_path = value;
  } else if (key == "env.user_context_user_column") {
    config.env.ratings.user_context_user_column = value;
  } else if (key == "env.user_context_columns") {
    config.env.ratings.user_context_columns = detail::parse_list(value);
  } else if (key == "output.dir") {
    config.out_dir = value;
  } else if (key == "output.round_log") {
    config.round_log = parse_bool(value, key);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

// Flat key=value text: one entry per line, '#' starts a comment, blank lines
// ignored.
inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string entry = detail::trim(line);
    if (entry.empty()) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    const std::string key = detail::trim(std::string_view(entry).substr(0, eq));
    const std::string value = detail::trim(std::string_view(entry).substr(eq + 1));
    try {
      apply_config_entry(config, key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

inline std::unique_ptr<Environment> make_environment(const EnvConfig& env) {
  if (env.kind == "synthetic") {
    if (env.mu.empty())
      throw std::invalid_argument("synthetic env requires env.mu");
    return std::make_unique<SyntheticBernoulliEnv>(env.mu, env.context_dim);
  }
  if (env.path.empty())
    throw std::invalid_argument("replay env requires env.path");
  if (env.kind == "classification")
    return std::make_unique<ClassificationReplayEnv>(
        load_classification_table(env.path, env.table));
  if (env.kind == "ratings")
    return std::make_unique<RatingsReplayEnv>(load_ratings_table(env.path, env.ratings));
  throw std::invalid_argument("unknown env.kind '" + env.kind + "'");
}

// Full cross-field validation against the resolved environment. Throws on the
// first violation; cheap enough to run before every experiment.
inline void validate_config(const ExperimentConfig& config, const Environment& env) {
  if (config.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (config.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!(config.delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (config.k < 1) throw std::invalid_argument("k must be >= 1");
  if (config.k > env.arm_count())
    throw std::invalid_argument(
        detail::format("k=%zu exceeds the environment's %zu arms", config.k,
                       env.arm_count()));
  if (config.resolved_psi_max() > config.k)
    throw std::invalid_argument("psi_max must not exceed k");
  if (config.policies.empty())
    throw std::invalid_argument("at least one policy required");
  if (config.strategies.empty())
    throw std::invalid_argument("at least one strategy required");
  // Instantiation validates the hyperparameters themselves.
  for (const auto& name : config.policies) {
    PolicyConfig pc = config.policy;
    pc.name = name;
    (void)make_policy(pc, env.arm_count(), env.context_dim());
  }
}

// ---- single run ---------------------------------------------------------------

struct RunMetadata {
  std::string policy;
  std::string strategy;
  std::size_t run_index = 0;
  std::uint64_t env_seed = 0;
  std::uint64_t patience_seed = 0;
  std::uint64_t agent_seed = 0;
};

struct RunResult {
  std::vector<double> rewards;    // overall reward per round, {0,1}
  std::vector<double> accuracy;   // Acc(1..T)
  double acc_final = 0.0;
  std::uint64_t t_c = 1;
  std::optional<double> regret;   // synthetic environments only
  std::uint64_t observed_total = 0;  // sum of |P_t| over the horizon
  RunMetadata meta;
};

// Stream ids of the documented seed-derivation contract.
inline constexpr std::uint64_t kEnvStream = 0;
inline constexpr std::uint64_t kPatienceStream = 1;
inline constexpr std::uint64_t kAgentStream = 2;

// Seeds for one (cell, run) pair. The environment and patience streams are
// shared across grid cells by default (common random numbers, so paired
// tests compare cells on identical user arrivals); the agent stream is always
// cell-specific.
struct RunSeeds {
  std::uint64_t env = 0, patience = 0, agent = 0;
};

inline RunSeeds derive_run_seeds(std::uint64_t base_seed, std::size_t run_index,
                                 std::string_view policy, std::string_view strategy,
                                 bool common_draws) {
  const std::uint64_t salt =
      fnv1a64(std::string(policy) + "/" + std::string(strategy));
  const std::uint64_t shared_base = common_draws ? base_seed : base_seed ^ salt;
  RunSeeds seeds;
  seeds.env = derive_seed(shared_base, run_index, kEnvStream);
  seeds.patience = derive_seed(shared_base, run_index, kPatienceStream);
  seeds.agent = derive_seed(base_seed ^ salt, run_index, kAgentStream);
  return seeds;
}

// One full replication: T rounds of draw -> recommend -> score -> feedback.
// Deterministic given (config, policy, strategy, run_index). `round_log`,
// when non-null, receives one tab-separated row per round.
inline RunResult run_single(const Environment& env, const ExperimentConfig& config,
                            const std::string& policy_name, StrategyKind strategy,
                            std::size_t run_index, std::ostream* round_log = nullptr) {
  const std::string strategy_label(strategy_name(strategy));
  const RunSeeds seeds = derive_run_seeds(config.base_seed, run_index, policy_name,
                                          strategy_label, config.common_draws);
  RngStream env_rng(seeds.env);
  RngStream patience_rng(seeds.patience);
  RngStream agent_rng(seeds.agent);

  PolicyConfig pc = config.policy;
  pc.name = policy_name;
  auto policy = make_policy(pc, env.arm_count(), env.context_dim());

  const bool partial = is_partial(strategy);
  const std::uint64_t psi_max = config.resolved_psi_max();

  RunResult result;
  result.meta = {policy_name, strategy_label, run_index,
                 seeds.env,   seeds.patience, seeds.agent};
  result.rewards.reserve(config.horizon);

  if (round_log != nullptr) *round_log << "t\tarms\tpsi\tobserved\treward\taccuracy\n";

  std::uint64_t round = 0;
  double reward_sum = 0.0;
  try {
    for (round = 1; round <= config.horizon; ++round) {
      const Interaction interaction = env.draw(env_rng);
      const SuperArm super =
          build_super_arm(*policy, interaction.context, config.k, agent_rng);
      const double reward = overall_reward(super, interaction.hidden_rewards);
      // Patience is only part of the partial protocol; classic strategies
      // never touch the patience stream.
      const std::int64_t psi =
          partial ? static_cast<std::int64_t>(sample_patience(patience_rng, psi_max))
                  : 0;
      const PartialSubset observed =
          apply_strategy(strategy, *policy, interaction.context, super,
                         interaction.hidden_rewards, psi, agent_rng,
                         config.bandit_reward);
      result.rewards.push_back(reward);
      result.observed_total += observed.size();
      reward_sum += reward;
      if (round_log != nullptr) {
        std::vector<std::string> arms;
        arms.reserve(super.arms.size());
        for (const ArmId a : super.arms) arms.push_back(std::to_string(a));
        *round_log << round << '\t' << detail::join(arms, '+') << '\t';
        if (partial)
          *round_log << psi;
        else
          *round_log << '-';
        *round_log << '\t' << observed.size() << '\t'
                   << static_cast<int>(reward) << '\t'
                   << detail::format("%.6f", reward_sum / static_cast<double>(round))
                   << '\n';
      }
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(detail::format("run %zu round %llu: ", run_index,
                                            static_cast<unsigned long long>(round)) +
                             e.what());
  }

  result.accuracy = running_accuracy(result.rewards);
  result.acc_final = result.accuracy.back();
  result.t_c = convergence_time(result.accuracy, config.delta);
  if (const auto oracle = env.oracle_success(config.k))
    result.regret = cumulative_regret(result.rewards, *oracle);
  return result;
}

// ---- aggregation ----------------------------------------------------------------

struct CellAggregate {
  std::string policy;
  std::string strategy;
  std::vector<double> acc;             // per-run Acc(T), run order
  std::vector<double> t_c;             // per-run convergence time
  std::vector<double> regret;          // per-run regret (synthetic only)
  std::vector<double> observed_ratio;  // per-run sum|P_t| / (k*T)
  double acc_mean = 0.0, acc_std = 0.0;
  double t_c_mean = 0.0, t_c_std = 0.0;
  std::optional<double> regret_mean;
  double observed_ratio_mean = 0.0;
};

struct StrategyAverageRow {
  std::string strategy;
  double acc = 0.0;  // mean over the policy set of per-policy Acc(T) means
  double t_c = 0.0;
};

struct StatTestRow {
  std::string family;  // kruskal-wallis | wilcoxon
  std::string metric;  // acc | tc
  std::string scope;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool degenerate = false;
};

struct AggregateReport {
  EnvMetadata env;
  std::optional<double> oracle_p;
  std::vector<std::string> policies;
  std::vector<std::string> strategies;
  std::vector<CellAggregate> cells;  // policy-major, strategy-minor
  std::vector<StrategyAverageRow> strategy_rows;
  std::vector<StatTestRow> tests;
};

namespace detail {

inline const CellAggregate& cell_at(const AggregateReport& report, std::size_t policy_idx,
                                    std::size_t strategy_idx) {
  return report.cells[policy_idx * report.strategies.size() + strategy_idx];
}

// The KW/Wilcoxon battery over the grid, both metrics, both directions.
inline void run_test_battery(AggregateReport& report) {
  const std::size_t n_pol = report.policies.size();
  const std::size_t n_str = report.strategies.size();
  const auto metric_of = [](const CellAggregate& cell, bool acc) -> const std::vector<double>& {
    return acc ? cell.acc : cell.t_c;
  };
  const char* metric_names[2] = {"acc", "tc"};
  // A scope with fewer than 3 pooled observations carries no rank information;
  // report it as degenerate rather than refusing the whole experiment.
  const auto push_kw = [&report](const char* metric, std::string scope,
                                 const std::vector<std::vector<double>>& groups,
                                 std::size_t n_obs) {
    if (n_obs < 3) {
      report.tests.push_back({"kruskal-wallis", metric, std::move(scope), 0.0, 1.0,
                              n_obs, true});
      return;
    }
    const KruskalWallisResult kw = kruskal_wallis(groups);
    report.tests.push_back({"kruskal-wallis", metric, std::move(scope), kw.h,
                            kw.p_value, n_obs, kw.degenerate});
  };

  for (int metric = 0; metric < 2; ++metric) {
    const bool acc = metric == 0;
    // Across policies, within each strategy.
    if (n_pol >= 2) {
      for (std::size_t s = 0; s < n_str; ++s) {
        std::vector<std::vector<double>> groups;
        std::size_t n_obs = 0;
        for (std::size_t p = 0; p < n_pol; ++p) {
          groups.push_back(metric_of(cell_at(report, p, s), acc));
          n_obs += groups.back().size();
        }
        push_kw(metric_names[metric], "strategy=" + report.strategies[s], groups,
                n_obs);
      }
    }
    // Across strategies, within each policy.
    if (n_str >= 2) {
      for (std::size_t p = 0; p < n_pol; ++p) {
        std::vector<std::vector<double>> groups;
        std::size_t n_obs = 0;
        for (std::size_t s = 0; s < n_str; ++s) {
          groups.push_back(metric_of(cell_at(report, p, s), acc));
          n_obs += groups.back().size();
        }
        push_kw(metric_names[metric], "policy=" + report.policies[p], groups, n_obs);
      }
    }
    // Pairwise strategy comparison: differences paired by (policy, run).
    for (std::size_t s1 = 0; s1 < n_str; ++s1) {
      for (std::size_t s2 = s1 + 1; s2 < n_str; ++s2) {
        std::vector<double> diffs;
        for (std::size_t p = 0; p < n_pol; ++p) {
          const auto& a = metric_of(cell_at(report, p, s1), acc);
          const auto& b = metric_of(cell_at(report, p, s2), acc);
          for (std::size_t r = 0; r < a.size(); ++r) diffs.push_back(a[r] - b[r]);
        }
        const WilcoxonResult wx = wilcoxon_signed_rank(diffs);
        report.tests.push_back({"wilcoxon", metric_names[metric],
                                report.strategies[s1] + "_vs_" + report.strategies[s2],
                                wx.w, wx.p_value, wx.n_used, wx.degenerate});
      }
    }
  }
}

}  // namespace detail

// Executes the full (policy x strategy x runs) grid and aggregates. Cells run
// one after another; a cell's replications run concurrently when
// config.parallel is set. Aggregation folds results in run-index order either
// way, so parallel and sequential execution produce the same report.
inline AggregateReport run_experiment(const ExperimentConfig& config) {
  const std::unique_ptr<Environment> env = make_environment(config.env);
  validate_config(config, *env);

  const bool write_logs = config.round_log && !config.out_dir.empty();
  if (!config.out_dir.empty())
    std::filesystem::create_directories(config.out_dir);

  AggregateReport report;
  report.env = env->metadata();
  report.oracle_p = env->oracle_success(config.k);
  report.policies = config.policies;
  for (const StrategyKind s : config.strategies)
    report.strategies.emplace_back(strategy_name(s));

  const double denom =
      static_cast<double>(config.k) * static_cast<double>(config.horizon);

  for (const std::string& policy : config.policies) {
    for (const StrategyKind strategy : config.strategies) {
      std::vector<RunResult> results(config.runs);
      std::vector<std::ostringstream> logs(write_logs ? config.runs : 0);
      const auto task = [&](std::size_t run) {
        std::ostream* log = write_logs ? &logs[run] : nullptr;
        return run_single(*env, config, policy, strategy, run, log);
      };
      try {
        if (config.parallel && config.runs > 1) {
          std::vector<std::future<RunResult>> futures;
          futures.reserve(config.runs);
          for (std::size_t run = 0; run < config.runs; ++run)
            futures.push_back(std::async(std::launch::async, task, run));
          for (std::size_t run = 0; run < config.runs; ++run)
            results[run] = futures[run].get();
        } else {
          for (std::size_t run = 0; run < config.runs; ++run) results[run] = task(run);
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("cell " + policy + "/" +
                                 std::string(strategy_name(strategy)) + ": " + e.what());
      }

      if (write_logs) {
        for (std::size_t run = 0; run < config.runs; ++run) {
          const std::filesystem::path file =
              std::filesystem::path(config.out_dir) /
              detail::format("rounds-%s-%s-run%zu.tsv", policy.c_str(),
                             strategy_name(strategy).data(), run);
          std::ofstream out(file);
          if (!out) throw std::runtime_error("cannot write " + file.string());
          out << logs[run].str();
        }
      }

      CellAggregate cell;
      cell.policy = policy;
      cell.strategy = strategy_name(strategy);
      for (const RunResult& r : results) {
        cell.acc.push_back(r.acc_final);
        cell.t_c.push_back(static_cast<double>(r.t_c));
        cell.observed_ratio.push_back(static_cast<double>(r.observed_total) / denom);
        if (r.regret) cell.regret.push_back(*r.regret);
      }
      cell.acc_mean = mean_of(cell.acc);
      cell.acc_std = sample_std(cell.acc);
      cell.t_c_mean = mean_of(cell.t_c);
      cell.t_c_std = sample_std(cell.t_c);
      cell.observed_ratio_mean = mean_of(cell.observed_ratio);
      if (!cell.regret.empty()) cell.regret_mean = mean_of(cell.regret);
      report.cells.push_back(std::move(cell));
    }
  }

  // Strategy-level averages over the policy set, in config order.
  for (std::size_t s = 0; s < report.strategies.size(); ++s) {
    std::vector<double> acc_means, tc_means;
    for (std::size_t p = 0; p < report.policies.size(); ++p) {
      acc_means.push_back(detail::cell_at(report, p, s).acc_mean);
      tc_means.push_back(detail::cell_at(report, p, s).t_c_mean);
    }
    report.strategy_rows.push_back({report.strategies[s], strategy_average(acc_means),
                                    strategy_average(tc_means)});
  }

  detail::run_test_battery(report);
  return report;
}

// ---- report rendering -------------------------------------------------------------

// Fixed-format text rendering; identical report structs render to identical
// bytes. No timestamps, no locale-dependent formatting, no pointer values.
inline std::string render_report(const AggregateReport& report,
                                 const ExperimentConfig& config) {
  using detail::format;
  std::string out;
  out += "combandit summary\n";
  out += "env.kind=" + report.env.kind + "\n";
  out += format("env.arms=%zu\n", report.env.arm_count);
  out += format("env.context_dim=%zu\n", report.env.context_dim);
  out += format("env.rows=%zu\n", report.env.row_count);
  if (report.env.arm_labels.empty()) {
    out += "env.labels=-\n";
  } else {
    out += format("env.labels.count=%zu\n", report.env.arm_labels.size());
    if (report.env.arm_labels.size() <= 32)
      out += "env.labels=" + detail::join(report.env.arm_labels, ',') + "\n";
    std::string joined;
    for (const auto& label : report.env.arm_labels) {
      joined += label;
      joined.push_back('\n');
    }
    out += format("env.labels.digest=%016llx\n",
                  static_cast<unsigned long long>(fnv1a64(joined)));
  }
  if (report.oracle_p) out += format("oracle_p=%.6f\n", *report.oracle_p);
  out += format("horizon=%llu\n", static_cast<unsigned long long>(config.horizon));
  out += format("k=%zu\n", config.k);
  out += format("psi_max=%llu\n",
                static_cast<unsigned long long>(config.resolved_psi_max()));
  out += format("delta=%.6f\n", config.delta);
  out += format("runs=%zu\n", config.runs);
  out += format("seed=%llu\n", static_cast<unsigned long long>(config.base_seed));
  out += format("common_draws=%s\n", config.common_draws ? "true" : "false");
  out += format("parallel=%s\n", config.parallel ? "true" : "false");
  out += format("bandit_reward=%s\n",
                config.bandit_reward == BanditRewardMode::Normalized ? "normalized" : "raw");
  out += format("policy.epsilon=%.6f\n", config.policy.epsilon);
  out += format("policy.ucb2_alpha=%.6f\n", config.policy.ucb2_alpha);
  out += format("policy.lin_alpha=%.6f\n", config.policy.lin_alpha);
  out += format("policy.lin_v=%.6f\n", config.policy.lin_v);
  out += format("policy.ridge=%.6f\n", config.policy.ridge);
  out += "policies=" + detail::join(report.policies, ',') + "\n";
  out += "strategies=" + detail::join(report.strategies, ',') + "\n";

  out += "\n[cells]\n";
  out += "policy strategy acc_mean acc_std tc_mean tc_std regret_mean observed_ratio\n";
  for (const CellAggregate& cell : report.cells) {
    out += cell.policy + " " + cell.strategy;
    out += format(" %.6f %.6f %.1f %.1f", cell.acc_mean, cell.acc_std, cell.t_c_mean,
                  cell.t_c_std);
    if (cell.regret_mean)
      out += format(" %.4f", *cell.regret_mean);
    else
      out += " -";
    out += format(" %.6f\n", cell.observed_ratio_mean);
  }

  out += "\n[strategy-averages]\n";
  out += "strategy acc tc\n";
  for (const StrategyAverageRow& row : report.strategy_rows)
    out += row.strategy + format(" %.6f %.1f\n", row.acc, row.t_c);

  out += "\n[tests]\n";
  out += "family metric scope statistic p n degenerate\n";
  for (const StatTestRow& test : report.tests) {
    out += test.family + " " + test.metric + " " + test.scope;
    out += format(" %.6f %.6f %zu %d\n", test.statistic, test.p_value, test.n,
                  test.degenerate ? 1 : 0);
  }
  return out;
}

inline void write_report(const AggregateReport& report, const ExperimentConfig& config,
                         std::ostream& out) {
  out << render_report(report, config);
}

}  // namespace combandit
