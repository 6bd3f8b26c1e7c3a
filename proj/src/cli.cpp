#include "explore/cli.hpp"

#include "explore/environments.hpp"
#include "explore/errors.hpp"
#include "explore/evaluation.hpp"
#include "explore/io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace explore {

namespace fs = std::filesystem;

Command parse_command(const std::string& name) {
  if (name == "solve") return Command::Solve;
  if (name == "explore") return Command::Explore;
  if (name == "sweep-xi") return Command::SweepXi;
  if (name == "sweep-zeta") return Command::SweepZeta;
  if (name == "goal") return Command::Goal;
  if (name == "bench") return Command::Bench;
  throw ParameterError("unknown command '" + name + "'");
}

const char* to_string(Command command) {
  switch (command) {
    case Command::Solve:
      return "solve";
    case Command::Explore:
      return "explore";
    case Command::SweepXi:
      return "sweep-xi";
    case Command::SweepZeta:
      return "sweep-zeta";
    case Command::Goal:
      return "goal";
    case Command::Bench:
      return "bench";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ParameterError(key + ": expected a number, got '" + value + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ParameterError(key + ": expected an integer, got '" + value + "'");
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const long long v = to_integer(key, value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ParameterError(key + ": value out of range");
  }
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ParameterError(key + ": expected true or false, got '" + value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table{
      {"env", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.env = v; }},
      {"algorithm", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.algorithm = v; }},
      {"kind",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.kinds.clear();
         for (const std::string& name : split_list(v)) {
           if (name == "all") {
             c.kinds = {ObjectiveKind::Infinity, ObjectiveKind::Frobenius, ObjectiveKind::ColumnSum,
                        ObjectiveKind::Dual};
             continue;
           }
           try {
             c.kinds.push_back(parse_objective_kind(name));
           } catch (const Error&) {
             throw ParameterError(k + ": unknown objective '" + name + "'");
           }
         }
       }},
      {"xi", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.xi = to_real(k, v); }},
      {"zeta", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.zeta = to_real(k, v); }},
      {"epsilon",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.epsilon = to_real(k, v); }},
      {"eta", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.eta = to_real(k, v); }},
      {"gamma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gamma = to_real(k, v); }},
      {"batch_n",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.batch_n = to_int(k, v); }},
      {"max_iters",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.max_iters = to_int(k, v); }},
      {"n_seeds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n_seeds = to_int(k, v); }},
      {"base_seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw ParameterError(k + ": must be nonnegative");
         c.base_seed = static_cast<std::uint64_t>(s);
       }},
      {"oracle", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.oracle = to_bool(k, v); }},
      {"stop_on_convergence",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.stop_on_convergence = to_bool(k, v);
       }},
      {"workers",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.workers = to_int(k, v); }},
      {"output", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output = v; }},
      {"xi_grid",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.xi_grid.clear();
         for (const std::string& x : split_list(v)) c.xi_grid.push_back(to_real(k, x));
       }},
      {"zeta_grid",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.zeta_grid.clear();
         for (const std::string& x : split_list(v)) c.zeta_grid.push_back(to_real(k, x));
       }},
      {"heatmaps",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.heatmaps = to_bool(k, v); }},
      {"horizons",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.horizons.clear();
         for (const std::string& x : split_list(v)) c.horizons.push_back(to_int(k, x));
       }},
      {"goal_runs",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.goal_runs = to_int(k, v); }},
      {"goal_state",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "hardest") {
           c.goal_state.reset();
         } else {
           c.goal_state = to_int(k, v);
         }
       }},
      {"goal_policies",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.goal_policies = split_list(v); }},
      {"sizes",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.sizes.clear();
         for (const std::string& item : split_list(v)) {
           const auto x = item.find('x');
           if (x == std::string::npos) throw ParameterError(k + ": expected SxA, got '" + item + "'");
           c.sizes.emplace_back(to_int(k, item.substr(0, x)), to_int(k, item.substr(x + 1)));
         }
       }},
      {"repeats",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.repeats = to_int(k, v); }},
      {"branching",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.branching = to_int(k, v); }},
      {"budget_seconds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.budget_seconds = to_real(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [key, setter] : setters()) out.push_back(key);
    return out;
  }();
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParameterError("config line " + std::to_string(number) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key.rfind("env.", 0) == 0) {
    if (key.size() == 4) throw ParameterError("empty environment parameter name");
    config.env_params[key.substr(4)] = value;
    return;
  }
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(config, key, value);
      return;
    }
  }
  throw ParameterError("unknown configuration key '" + key + "'");
}

namespace {

const std::vector<ObjectiveKind>& all_kinds() {
  static const std::vector<ObjectiveKind> kinds{ObjectiveKind::Infinity, ObjectiveKind::Frobenius,
                                                ObjectiveKind::ColumnSum, ObjectiveKind::Dual};
  return kinds;
}

std::vector<ObjectiveKind> kinds_for(const ExperimentConfig& config, Command command) {
  if (!config.kinds.empty()) return config.kinds;
  switch (command) {
    case Command::Solve:
    case Command::Bench:
      return all_kinds();
    case Command::SweepXi:
      return {ObjectiveKind::Infinity, ObjectiveKind::Frobenius, ObjectiveKind::ColumnSum};
    case Command::SweepZeta:
      return {ObjectiveKind::Infinity, ObjectiveKind::Frobenius};
    case Command::Explore:
    case Command::Goal:
      return {ObjectiveKind::Frobenius};
  }
  return {};
}

std::string algorithm_for(const ExperimentConfig& config, Command command) {
  if (!config.algorithm.empty()) return config.algorithm;
  return command == Command::Explore ? "ideal" : "exact-solve";
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(i + 1 == n ? hi : lo + (hi - lo) * i / (n - 1));
  return out;
}

std::vector<double> xi_grid_for(const ExperimentConfig& config, const EnvSpec& env) {
  if (!config.xi_grid.empty()) return config.xi_grid;
  return linspace(0.0, 1.0 / env.mdp.n_actions(), 11);
}

std::vector<double> zeta_grid_for(const ExperimentConfig& config, const EnvSpec& env) {
  if (!config.zeta_grid.empty()) return config.zeta_grid;
  return linspace(1.0 / env.mdp.n_states(), 1.0, 10);
}

}  // namespace

void validate_config(const ExperimentConfig& config, Command command) {
  const EnvSpec env = make_env(config.env, config.env_params);
  const int ns = env.mdp.n_states();
  const int na = env.mdp.n_actions();
  const double max_xi = 1.0 / na;
  const double min_zeta = 1.0 / ns;
  const std::vector<ObjectiveKind> kinds = kinds_for(config, command);
  const std::string algorithm = algorithm_for(config, command);

  const auto check_xi = [&](double xi) {
    require(xi >= 0.0 && xi <= max_xi + 1e-12, "xi must lie in [0, 1/|A|] = [0, " + format_number(max_xi) + "]");
  };
  const auto check_zeta = [&](double zeta) {
    require(zeta >= min_zeta - 1e-12 && zeta <= 1.0,
            "zeta must lie in [1/|S|, 1] = [" + format_number(min_zeta) + ", 1]");
  };
  const auto check_learning = [&] {
    require(config.batch_n >= 1, "batch_n must be positive");
    require(config.max_iters >= 0, "max_iters must be nonnegative");
    require(config.epsilon >= 0.0 && config.epsilon <= 1.0, "epsilon must lie in [0, 1]");
    require(config.eta > 0.0 && config.eta <= 1.0, "eta must lie in (0, 1]");
    require(config.gamma >= 0.0 && config.gamma < 1.0, "gamma must lie in [0, 1)");
  };
  require(config.workers >= 0, "workers must be nonnegative");

  switch (command) {
    case Command::Solve:
      require(algorithm == "exact-solve", "solve runs the exact-solve algorithm only");
      check_xi(config.xi);
      check_zeta(config.zeta);
      break;
    case Command::Explore:
      require(algorithm == "ideal" || algorithm == "maxent" || algorithm == "countbased" || algorithm == "random",
              "explore: algorithm must be ideal, maxent, countbased or random");
      require(kinds.size() == 1, "explore takes a single objective kind");
      require(config.n_seeds >= 1, "n_seeds must be positive");
      check_xi(config.xi);
      check_zeta(config.zeta);
      check_learning();
      break;
    case Command::SweepXi:
      require(algorithm == "exact-solve", "sweep-xi runs the exact-solve algorithm only");
      for (double xi : xi_grid_for(config, env)) check_xi(xi);
      check_zeta(config.zeta);
      break;
    case Command::SweepZeta:
      require(algorithm == "exact-solve", "sweep-zeta runs the exact-solve algorithm only");
      for (ObjectiveKind k : kinds) {
        require(k == ObjectiveKind::Infinity || k == ObjectiveKind::Frobenius,
                "sweep-zeta applies to the infinity and frobenius objectives only");
      }
      for (double z : zeta_grid_for(config, env)) check_zeta(z);
      check_xi(config.xi);
      break;
    case Command::Goal:
      require(kinds.size() == 1, "goal takes a single objective kind");
      require(!config.goal_policies.empty(), "goal_policies must not be empty");
      for (const std::string& p : config.goal_policies) {
        require(p == "ideal" || p == "countbased" || p == "random",
                "goal_policies: unknown policy '" + p + "' (ideal, countbased, random)");
      }
      require(!config.horizons.empty(), "horizons must not be empty");
      for (int h : config.horizons) require(h >= 0, "horizons must be nonnegative");
      require(config.goal_runs >= 1, "goal_runs must be positive");
      if (config.goal_state) require(*config.goal_state >= 0 && *config.goal_state < ns, "goal_state out of range");
      check_xi(config.xi);
      check_zeta(config.zeta);
      check_learning();
      break;
    case Command::Bench:
      require(!config.sizes.empty(), "sizes must not be empty");
      for (const auto& [s, a] : config.sizes) {
        require(s >= 2 && a >= 1, "sizes: need at least 2 states and 1 action");
        require(config.xi <= 1.0 / a + 1e-12 && config.xi >= 0.0, "xi exceeds 1/|A| for a bench size");
      }
      require(config.repeats >= 1, "repeats must be positive");
      require(config.branching >= 1, "branching must be positive");
      require(config.budget_seconds > 0.0, "budget_seconds must be positive");
      break;
  }
}

fs::path output_directory(const ExperimentConfig& config, Command command) {
  fs::path out = config.output.empty() ? fs::path(to_string(command)) : fs::path(config.output);
  if (out.is_absolute()) return out;
  const char* root = std::getenv("EXPLORE_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "results") / out;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<std::optional<RunRecord>>& runs) {
  int failed = 0;
  std::size_t length = 0;
  for (const auto& r : runs) {
    if (!r) {
      ++failed;
      continue;
    }
    length = std::max(length, r->rows.size());
  }
  constexpr int kMetrics = 5;
  std::vector<AggregateRow> out;
  for (std::size_t i = 0; i < length; ++i) {
    AggregateRow row;
    row.failed_seeds = failed;
    std::vector<std::vector<double>> values(kMetrics);
    double samples = 0.0;
    for (const auto& r : runs) {
      if (!r || i >= r->rows.size()) continue;
      const RunRow& x = r->rows[i];
      row.iter = x.iter;
      samples += static_cast<double>(x.samples);
      const double m[kMetrics] = {x.h_state, x.h_state_action, x.min_d, x.gap, x.model_err_f};
      for (int k = 0; k < kMetrics; ++k) values[k].push_back(m[k]);
      ++row.seeds;
    }
    row.samples = samples / row.seeds;
    for (int k = 0; k < kMetrics; ++k) {
      const std::vector<double>& v = values[k];
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ci = std::numeric_limits<double>::quiet_NaN();
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        ci = 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
      }
      row.mean.push_back(mean);
      row.ci95.push_back(ci);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  std::vector<std::string> header{"iter", "samples", "seeds", "failed_seeds"};
  for (const char* m : {"h_state", "h_state_action", "min_d", "gap", "model_err_f"}) {
    header.push_back(std::string(m) + "_mean");
    header.push_back(std::string(m) + "_ci95");
  }
  CsvWriter csv(os, header);
  for (const AggregateRow& r : rows) {
    std::vector<std::string> cells{std::to_string(r.iter), format_number(r.samples), std::to_string(r.seeds),
                                   std::to_string(r.failed_seeds)};
    for (std::size_t k = 0; k < r.mean.size(); ++k) {
      cells.push_back(format_number(r.mean[k]));
      cells.push_back(format_number(r.ci95[k]));
    }
    csv.row(cells);
  }
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

fs::path prepare(const ExperimentConfig& config, Command command, std::ostream& log) {
  const fs::path dir = output_directory(config, command);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  log << to_string(command) << ": writing to " << dir.string() << '\n';
  return dir;
}

std::string opt_number(const std::optional<double>& v) {
  return v ? format_number(*v) : "nan";
}

// One row per grid row, one column per grid column; walls are left empty.
void write_heatmap_csv(std::ostream& os, const GridLayout& layout, const std::vector<double>& values) {
  std::vector<std::string> header;
  for (int c = 0; c < layout.cols; ++c) header.push_back("c" + std::to_string(c));
  std::vector<std::vector<std::string>> cells(layout.rows, std::vector<std::string>(layout.cols));
  for (std::size_t i = 0; i < layout.cells.size(); ++i) {
    cells[layout.cells[i].first][layout.cells[i].second] = format_number(values[i]);
  }
  CsvWriter csv(os, header);
  for (const auto& row : cells) csv.row(row);
}

bool uses_zeta(ObjectiveKind k) { return k == ObjectiveKind::Infinity || k == ObjectiveKind::Frobenius; }

void write_plot(const fs::path& path, const std::string& title, const std::string& x_label,
                const std::string& y_label, const std::vector<PlotSeries>& series) {
  std::ofstream os = open_output(path);
  write_line_plot_svg(os, title, x_label, y_label, series);
}

}  // namespace

int cmd_solve(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config, Command::Solve);
  const EnvSpec env = make_env(config.env, config.env_params);
  const fs::path dir = prepare(config, Command::Solve, log);
  std::ofstream table = open_output(dir / "solve.csv");
  CsvWriter csv(table, {"kind", "xi", "zeta", "objective", "h_state", "h_state_action", "min_d", "gap", "bound"});
  for (ObjectiveKind kind : kinds_for(config, Command::Solve)) {
    ObjectiveOptions o;
    o.xi = config.xi;
    o.zeta = uses_zeta(kind) ? config.zeta : 1.0;
    ObjectiveSolution sol;
    try {
      sol = solve_objective(env.mdp, kind, o);
    } catch (const SolverError& e) {
      log << "solve: " << to_string(kind) << " failed: " << e.what() << '\n';
      return 2;
    }
    EvaluateOptions eo;
    eo.with_mixing_time = false;
    eo.with_bounds = false;
    const PolicyMetrics m = evaluate_policy(env, sol.policy, eo);
    csv.row({to_string(kind), format_number(config.xi), uses_zeta(kind) ? format_number(config.zeta) : "",
             format_number(sol.objective_value), opt_number(m.h_state), opt_number(m.h_state_action),
             opt_number(m.min_d), format_number(m.spectral_gap), format_number(sol.bound_value)});
    std::ofstream policy = open_output(dir / ("policy_" + std::string(to_string(kind)) + ".txt"));
    write_matrix_text(policy, sol.policy.probs());
    std::ofstream solution = open_output(dir / ("solution_" + std::string(to_string(kind)) + ".txt"));
    write_solution_text(solution, sol);
    log << std::left << std::setw(11) << to_string(kind) << " objective " << format_number(sol.objective_value, 6)
        << "  h_state " << opt_number(m.h_state) << "  min_d " << opt_number(m.min_d) << "  ("
        << format_number(sol.solve_seconds * 1e3, 4) << " ms)\n";
  }
  return 0;
}

namespace {

struct SeedRun {
  RunRecord record;
  std::optional<PolicyTable> policy;
};

SeedRun run_seed(const EnvSpec& env, const ExperimentConfig& config, const std::string& algorithm, ObjectiveKind kind,
                 std::uint64_t seed) {
  if (algorithm == "ideal") {
    IdealOptions o;
    o.kind = kind;
    o.xi = config.xi;
    o.zeta = uses_zeta(kind) ? config.zeta : 1.0;
    o.batch_n = config.batch_n;
    o.max_iters = config.max_iters;
    o.seed = seed;
    o.oracle = config.oracle;
    o.stop_on_convergence = config.stop_on_convergence;
    IdealResult r = run_ideal(env, o);
    return {std::move(r.record), std::move(r.policy)};
  }
  if (algorithm == "countbased") {
    CountBasedOptions o;
    o.epsilon = config.epsilon;
    o.batch_n = config.batch_n;
    o.max_iters = config.max_iters;
    o.seed = seed;
    o.gamma = config.gamma;
    CountBasedResult r = run_countbased(env, o);
    return {std::move(r.record), std::move(r.policy)};
  }
  if (algorithm == "maxent") {
    MaxEntOptions o;
    o.epsilon = config.epsilon;
    o.eta = config.eta;
    o.batch_n = config.batch_n;
    o.max_iters = config.max_iters;
    o.seed = seed;
    o.gamma = config.gamma;
    return {run_maxent(env, o).record, std::nullopt};
  }
  return {run_random_baseline(env, config.batch_n, config.max_iters, seed), std::nullopt};
}

}  // namespace

int cmd_explore(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config, Command::Explore);
  const EnvSpec env = make_env(config.env, config.env_params);
  const std::string algorithm = algorithm_for(config, Command::Explore);
  const ObjectiveKind kind = kinds_for(config, Command::Explore).front();
  const fs::path dir = prepare(config, Command::Explore, log);

  std::vector<std::string> errors;
  const std::vector<std::optional<SeedRun>> results = run_pool<SeedRun>(
      config.n_seeds, config.workers,
      [&](int i) { return run_seed(env, config, algorithm, kind, config.base_seed + static_cast<std::uint64_t>(i)); },
      errors);

  std::vector<std::optional<RunRecord>> records;
  std::ofstream failures = open_output(dir / "failures.log");
  int failed = 0;
  for (int i = 0; i < config.n_seeds; ++i) {
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(i);
    if (!results[i]) {
      ++failed;
      failures << "seed " << seed << ": " << errors[i] << '\n';
      log << "explore: seed " << seed << " failed: " << errors[i] << '\n';
      records.emplace_back(std::nullopt);
      continue;
    }
    const SeedRun& run = *results[i];
    for (const std::string& f : run.record.failures) failures << "seed " << seed << ": iteration " << f << '\n';
    std::ofstream os = open_output(dir / ("seed_" + std::to_string(seed) + ".csv"));
    write_run_csv(os, run.record);
    if (run.policy) {
      std::ofstream ps = open_output(dir / ("policy_seed_" + std::to_string(seed) + ".txt"));
      write_matrix_text(ps, run.policy->probs());
    }
    records.push_back(run.record);
  }

  const std::vector<AggregateRow> rows = aggregate_runs(records);
  std::ofstream agg = open_output(dir / "aggregate.csv");
  write_aggregate_csv(agg, rows);

  PlotSeries entropy{algorithm, {}, {}};
  PlotSeries error{algorithm, {}, {}};
  for (const AggregateRow& r : rows) {
    entropy.x.push_back(r.iter);
    entropy.y.push_back(r.mean[0]);
    error.x.push_back(r.samples);
    error.y.push_back(r.mean[4]);
  }
  write_plot(dir / "entropy.svg", config.env + " state entropy", "iteration", "normalized H(d)", {entropy});
  write_plot(dir / "model_error.svg", config.env + " model error", "samples", "||P - P_hat||_F", {error});

  if (!rows.empty()) {
    log << "explore: " << algorithm << " over " << rows.back().seeds << " seeds, final h_state "
        << format_number(rows.back().mean[0], 4) << " +- " << format_number(rows.back().ci95[0], 3) << ", "
        << failed << " failed\n";
  }
  return failed == config.n_seeds ? 2 : 0;
}

int cmd_sweep_xi(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config, Command::SweepXi);
  const EnvSpec env = make_env(config.env, config.env_params);
  const std::vector<double> grid = xi_grid_for(config, env);
  const fs::path dir = prepare(config, Command::SweepXi, log);
  std::ofstream table = open_output(dir / "sweep_xi.csv");
  CsvWriter csv(table, {"kind", "xi", "zeta", "objective", "h_state", "h_state_action", "min_d"});
  std::vector<PlotSeries> entropy;
  std::vector<PlotSeries> objective;
  for (ObjectiveKind kind : kinds_for(config, Command::SweepXi)) {
    const double zeta = uses_zeta(kind) ? config.zeta : 1.0;
    std::vector<XiPoint> points;
    try {
      points = sweep_xi(env, kind, grid, zeta);
    } catch (const SolverError& e) {
      log << "sweep-xi: " << to_string(kind) << " failed: " << e.what() << '\n';
      return 2;
    }
    PlotSeries h{to_string(kind), {}, {}};
    PlotSeries f{to_string(kind), {}, {}};
    for (const XiPoint& p : points) {
      csv.row({to_string(kind), format_number(p.xi), uses_zeta(kind) ? format_number(zeta) : "",
               format_number(p.objective), format_number(p.h_state), format_number(p.h_state_action),
               format_number(p.min_d)});
      h.x.push_back(p.xi);
      h.y.push_back(p.h_state);
      f.x.push_back(p.xi);
      f.y.push_back(p.objective);
    }
    entropy.push_back(std::move(h));
    objective.push_back(std::move(f));
  }
  write_plot(dir / "sweep_xi_entropy.svg", config.env + ": entropy vs action floor", "xi", "normalized H(d)", entropy);
  write_plot(dir / "sweep_xi_objective.svg", config.env + ": objective vs action floor", "xi", "objective",
             objective);
  return 0;
}

int cmd_sweep_zeta(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config, Command::SweepZeta);
  const EnvSpec env = make_env(config.env, config.env_params);
  const std::vector<double> grid = zeta_grid_for(config, env);
  const fs::path dir = prepare(config, Command::SweepZeta, log);
  std::ofstream table = open_output(dir / "sweep_zeta.csv");
  CsvWriter csv(table, {"kind", "zeta", "xi", "objective", "h_state", "gap", "min_d"});
  std::vector<PlotSeries> entropy;
  std::vector<PlotSeries> gap;
  const bool heatmaps = config.heatmaps && env.grid.has_value();
  for (ObjectiveKind kind : kinds_for(config, Command::SweepZeta)) {
    std::vector<ZetaPoint> points;
    try {
      points = sweep_zeta(env, kind, grid, config.xi, heatmaps);
    } catch (const SolverError& e) {
      log << "sweep-zeta: " << to_string(kind) << " failed: " << e.what() << '\n';
      return 2;
    }
    PlotSeries h{to_string(kind), {}, {}};
    PlotSeries g{to_string(kind), {}, {}};
    for (std::size_t i = 0; i < points.size(); ++i) {
      const ZetaPoint& p = points[i];
      csv.row({to_string(kind), format_number(p.zeta), format_number(config.xi), format_number(p.objective),
               format_number(p.h_state), format_number(p.spectral_gap), format_number(p.min_d)});
      h.x.push_back(p.zeta);
      h.y.push_back(p.h_state);
      g.x.push_back(p.zeta);
      g.y.push_back(p.spectral_gap);
      if (heatmaps && p.state_dist) {
        const GridLayout& layout = *env.grid;
        std::vector<double> values(p.state_dist->data(), p.state_dist->data() + p.state_dist->size());
        const std::string stem = "heatmap_" + std::string(to_string(kind)) + "_" + std::to_string(i);
        std::ofstream os = open_output(dir / (stem + ".svg"));
        write_heatmap_svg(os, std::string(to_string(kind)) + " zeta=" + format_number(p.zeta, 4), layout.rows,
                          layout.cols, layout.cells, values);
        std::ofstream grid = open_output(dir / (stem + ".csv"));
        write_heatmap_csv(grid, layout, values);
      }
    }
    entropy.push_back(std::move(h));
    gap.push_back(std::move(g));
  }
  write_plot(dir / "sweep_zeta_entropy.svg", config.env + ": entropy vs target cap", "zeta", "normalized H(d)",
             entropy);
  write_plot(dir / "sweep_zeta_gap.svg", config.env + ": spectral gap vs target cap", "zeta", "spectral gap", gap);
  return 0;
}

int cmd_goal(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config, Command::Goal);
  const EnvSpec env = make_env(config.env, config.env_params);
  const ObjectiveKind kind = kinds_for(config, Command::Goal).front();
  const fs::path dir = prepare(config, Command::Goal, log);

  GoalOptions go;
  go.goal = config.goal_state ? *config.goal_state : hardest_state(env, config.base_seed, go.hardest_samples);
  log << "goal: target state " << *go.goal << '\n';

  std::vector<std::string> errors;
  const int n = static_cast<int>(config.goal_policies.size());
  const auto results = run_pool<std::vector<GoalTaskResult>>(
      n, config.workers,
      [&](int i) {
        const std::string& name = config.goal_policies[i];
        PolicyTable policy = PolicyTable::uniform(env.mdp.n_states(), env.mdp.n_actions());
        if (name != "random") {
          policy = *run_seed(env, config, name, kind, config.base_seed).policy;
        }
        return goal_conditioned_eval(env, policy, config.horizons, config.goal_runs, config.gamma, config.base_seed,
                                     go);
      },
      errors);

  std::ofstream table = open_output(dir / "goal.csv");
  CsvWriter csv(table, {"policy", "horizon", "success_rate", "mean_return"});
  std::vector<PlotSeries> series;
  int status = 0;
  for (int i = 0; i < n; ++i) {
    const std::string& name = config.goal_policies[i];
    if (!results[i]) {
      log << "goal: " << name << " failed: " << errors[i] << '\n';
      status = 2;
      continue;
    }
    PlotSeries s{name, {}, {}};
    for (const GoalTaskResult& r : *results[i]) {
      csv.row({name, std::to_string(r.horizon), format_number(r.success_rate), format_number(r.mean_return)});
      s.x.push_back(r.horizon);
      s.y.push_back(r.success_rate);
      log << "goal: " << name << " horizon " << r.horizon << " success " << format_number(r.success_rate, 4) << '\n';
    }
    series.push_back(std::move(s));
  }
  write_plot(dir / "goal.svg", config.env + ": goal reaching", "horizon", "success rate", series);
  return status;
}

int cmd_bench(const ExperimentConfig& config, std::ostream& log) {
  validate_config(config, Command::Bench);
  const fs::path dir = prepare(config, Command::Bench, log);
  TimingOptions to;
  to.repeats = config.repeats;
  to.branching = config.branching;
  to.budget_seconds = config.budget_seconds;
  to.objective.xi = config.xi;
  to.objective.zeta = config.zeta;
  const std::vector<TimingRow> rows = solve_time_study(config.sizes, kinds_for(config, Command::Bench),
                                                       config.base_seed, to);
  std::ofstream table = open_output(dir / "bench.csv");
  CsvWriter csv(table, {"states", "actions", "kind", "variables", "seconds", "repeats", "timed_out"});
  std::map<std::string, PlotSeries> series;
  for (const TimingRow& r : rows) {
    csv.row({std::to_string(r.n_states), std::to_string(r.n_actions), to_string(r.kind), std::to_string(r.variables),
             format_number(r.seconds, 6), std::to_string(r.repeats), r.timed_out ? "1" : "0"});
    PlotSeries& s = series[to_string(r.kind)];
    s.name = to_string(r.kind);
    if (!std::isnan(r.seconds)) {
      s.x.push_back(static_cast<double>(r.n_states) * r.n_actions);
      s.y.push_back(r.seconds);
    }
    log << "bench: " << r.n_states << "x" << r.n_actions << ' ' << to_string(r.kind) << ' '
        << (std::isnan(r.seconds) ? std::string("skipped") : format_number(r.seconds, 4) + " s") << '\n';
  }
  std::vector<PlotSeries> plots;
  for (auto& [name, s] : series) plots.push_back(std::move(s));
  write_plot(dir / "bench.svg", "solve time on random MDPs", "|S||A|", "seconds", plots);
  return 0;
}

namespace {

const char* kHelpFooter = R"(Configuration:
  --config FILE holds "key = value" lines ('#' starts a comment); flags given on
  the command line override it. Keys: env, env.<param>, algorithm, kind, xi, zeta,
  epsilon, eta, gamma, batch_n, max_iters, n_seeds, base_seed, oracle,
  stop_on_convergence, workers, output, xi_grid, zeta_grid, heatmaps, horizons,
  goal_runs, goal_state, goal_policies, sizes, repeats, branching, budget_seconds.
  Every key also has a flag spelled with dashes (batch_n -> --batch-n).
  Relative output paths are placed under $EXPLORE_OUTPUT_ROOT (default ./results).
  Seed i of a batch runs with base_seed + i.

CSV columns:
  solve.csv       kind,xi,zeta,objective,h_state,h_state_action,min_d,gap,bound
  seed_<k>.csv    iter,samples,h_state,h_state_action,min_d,gap,model_err_f,solve_ms
  aggregate.csv   iter,samples,seeds,failed_seeds, then <metric>_mean,<metric>_ci95
                  for h_state,h_state_action,min_d,gap,model_err_f
  sweep_xi.csv    kind,xi,zeta,objective,h_state,h_state_action,min_d
  sweep_zeta.csv  kind,zeta,xi,objective,h_state,gap,min_d
  heatmap_*.csv   c0..c<cols-1>, one row per grid row, stationary probability
                  per cell (walls empty)
  goal.csv        policy,horizon,success_rate,mean_return
  bench.csv       states,actions,kind,variables,seconds,repeats,timed_out

Exit codes: 0 success, 1 configuration error, 2 solver or runtime failure.)";

struct Subcommand {
  Command command;
  const char* description;
  std::vector<std::string> keys;
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> table{
      {Command::Solve, "Exact solve of each objective on one environment", {"env", "kind", "xi", "zeta", "output"}},
      {Command::Explore,
       "Learning runs over a batch of seeds",
       {"env", "algorithm", "kind", "xi", "zeta", "epsilon", "eta", "gamma", "batch_n", "max_iters", "n_seeds",
        "base_seed", "oracle", "stop_on_convergence", "workers", "output"}},
      {Command::SweepXi, "Exact solves over a grid of action floors", {"env", "kind", "xi_grid", "zeta", "output"}},
      {Command::SweepZeta,
       "Exact solves over a grid of target caps",
       {"env", "kind", "zeta_grid", "xi", "heatmaps", "output"}},
      {Command::Goal,
       "Goal reaching after exploration, per horizon",
       {"env", "kind", "xi", "zeta", "epsilon", "gamma", "batch_n", "max_iters", "base_seed", "horizons",
        "goal_runs", "goal_state", "goal_policies", "workers", "output"}},
      {Command::Bench,
       "Solve-time study on random MDPs",
       {"kind", "xi", "zeta", "sizes", "repeats", "branching", "budget_seconds", "base_seed", "output"}},
  };
  return table;
}

std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '_', '-');
  return "--" + out;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Steady-state entropy exploration: exact solves, learning runs and studies"};
  app.footer(kHelpFooter);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> env_params;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::App*, std::vector<std::pair<std::string, CLI::Option*>>>> registered;

  for (const Subcommand& sc : subcommands()) {
    CLI::App* sub = app.add_subcommand(to_string(sc.command), sc.description);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--env-param", env_params, "environment parameter as name=value (repeatable)");
    sub->add_option("--set", overrides, "any configuration key as key=value (repeatable)");
    std::vector<std::pair<std::string, CLI::Option*>> options;
    for (const std::string& key : sc.keys) {
      options.emplace_back(key, sub->add_option(flag_name(key), values[key], key));
    }
    registered.emplace_back(sub, std::move(options));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  Command command = Command::Solve;
  ExperimentConfig config;
  try {
    const std::vector<std::pair<std::string, CLI::Option*>>* given = nullptr;
    for (const auto& [sub, options] : registered) {
      if (sub->parsed()) {
        command = parse_command(sub->get_name());
        given = &options;
      }
    }
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ParameterError("cannot read config file " + config_path);
      for (const auto& [key, value] : parse_config_text(is)) apply_setting(config, key, value);
    }
    const auto apply_pair = [&](const std::string& prefix, const std::string& item) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParameterError("expected name=value, got '" + item + "'");
      apply_setting(config, prefix + trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    };
    for (const std::string& item : overrides) apply_pair("", item);
    for (const std::string& item : env_params) apply_pair("env.", item);
    for (const auto& [key, option] : *given) {
      if (option->count() > 0) apply_setting(config, key, values[key]);
    }
    validate_config(config, command);
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  }

  try {
    switch (command) {
      case Command::Solve:
        return cmd_solve(config, std::cerr);
      case Command::Explore:
        return cmd_explore(config, std::cerr);
      case Command::SweepXi:
        return cmd_sweep_xi(config, std::cerr);
      case Command::SweepZeta:
        return cmd_sweep_zeta(config, std::cerr);
      case Command::Goal:
        return cmd_goal(config, std::cerr);
      case Command::Bench:
        return cmd_bench(config, std::cerr);
    }
  } catch (const ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace explore
