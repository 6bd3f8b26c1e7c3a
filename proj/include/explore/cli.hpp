#pragma once

// Command-line driver: configuration (key = value files with flag overrides),
// seeded batch runs on a worker pool, and CSV / SVG / policy artifacts.

#include "explore/agents.hpp"
#include "explore/objectives.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace explore {

enum class Command { Solve, Explore, SweepXi, SweepZeta, Goal, Bench };

/// Accepts the subcommand spellings: solve, explore, sweep-xi, sweep-zeta,
/// goal, bench.
Command parse_command(const std::string& name);
const char* to_string(Command command);

struct ExperimentConfig {
  std::string env = "single-chain";
  std::map<std::string, std::string> env_params;
  /// ideal | maxent | countbased | random | exact-solve; empty picks the
  /// command's default.
  std::string algorithm;
  /// Empty picks the command's default set.
  std::vector<ObjectiveKind> kinds;
  double xi = 0.1;
  double zeta = 0.7;
  double epsilon = 0.1;
  double eta = 0.02;
  double gamma = 0.99;
  int batch_n = 10;
  int max_iters = 300;
  int n_seeds = 1;
  std::uint64_t base_seed = 0;
  bool oracle = false;
  bool stop_on_convergence = false;
  /// Worker threads; 0 means the available hardware parallelism.
  int workers = 0;
  /// Relative paths are resolved against EXPLORE_OUTPUT_ROOT when set.
  std::string output;

  std::vector<double> xi_grid;
  std::vector<double> zeta_grid;
  bool heatmaps = false;

  std::vector<int> horizons{10, 25, 50, 100};
  int goal_runs = 500;
  std::optional<int> goal_state;
  /// Exploration policies compared by `goal`.
  std::vector<std::string> goal_policies{"ideal", "random"};

  std::vector<std::pair<int, int>> sizes{{10, 4}, {20, 4}, {40, 6}, {90, 8}};
  int repeats = 5;
  int branching = 5;
  double budget_seconds = 60.0;
};

/// Recognized configuration keys, in --help order.
const std::vector<std::string>& config_keys();

/// Parses "key = value" lines. Blank lines and text after '#' are ignored.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream& is);

/// Sets one key. Keys "env.<name>" become environment parameters. Throws
/// ParameterError on unknown keys or malformed values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Range checks against the configured environment; throws ParameterError.
void validate_config(const ExperimentConfig& config, Command command);

/// Final output directory for a command.
std::filesystem::path output_directory(const ExperimentConfig& config, Command command);

/// Per-iteration mean and 95% normal-approximation half-width over seeds.
struct AggregateRow {
  int iter = 0;
  double samples = 0.0;
  int seeds = 0;
  int failed_seeds = 0;
  /// h_state, h_state_action, min_d, gap, model_err_f.
  std::vector<double> mean;
  std::vector<double> ci95;
};

/// Seeds without a record are counted as failed. Iterations where a seed has
/// no row (early stop) average over the seeds that do.
std::vector<AggregateRow> aggregate_runs(const std::vector<std::optional<RunRecord>>& runs);
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

/// Evaluates `fn(i)` for i in [0, n) on `workers` threads. The returned slot
/// is empty when fn threw; `errors[i]` then holds the message.
template <typename T, typename Fn>
std::vector<std::optional<T>> run_pool(int n, int workers, Fn fn, std::vector<std::string>& errors) {
  std::vector<std::optional<T>> out(n);
  errors.assign(n, "");
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, std::max(n, 1));
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (std::thread& t : threads) t.join();
  return out;
}

int cmd_solve(const ExperimentConfig& config, std::ostream& log);
int cmd_explore(const ExperimentConfig& config, std::ostream& log);
int cmd_sweep_xi(const ExperimentConfig& config, std::ostream& log);
int cmd_sweep_zeta(const ExperimentConfig& config, std::ostream& log);
int cmd_goal(const ExperimentConfig& config, std::ostream& log);
int cmd_bench(const ExperimentConfig& config, std::ostream& log);

/// Full entry point. Exit codes: 0 success, 1 configuration error, 2 solver
/// or runtime failure.
int run_cli(int argc, char** argv);

}  // namespace explore
