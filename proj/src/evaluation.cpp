#include "explore/evaluation.hpp"

#include "explore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace explore {

double EntropyBounds::max() const { return std::max({infinity, frobenius, column_sum}); }

PolicyMetrics evaluate_policy(const EnvSpec& env, const PolicyTable& policy, const EvaluateOptions& options) {
  const TabularMdp& mdp = env.mdp;
  PolicyMetrics m;
  const StateChain chain = induce_chain(mdp, policy);
  m.spectral_gap = spectral_info(chain).spectral_gap;
  if (options.with_bounds) {
    m.bounds.infinity = entropy_lower_bound(mdp, policy, ObjectiveKind::Infinity);
    m.bounds.frobenius = entropy_lower_bound(mdp, policy, ObjectiveKind::Frobenius);
    m.bounds.column_sum = entropy_lower_bound(mdp, policy, ObjectiveKind::ColumnSum);
  }
  try {
    const Distribution d = stationary_distribution(chain);
    m.h_state = d.entropy_normalized();
    m.h_state_nats = d.entropy_nats();
    m.min_d = d.min();
    m.h_state_action = state_action_distribution(mdp, policy, d).entropy_normalized();
    m.state_dist = d.probs();
  } catch (const NonErgodicError&) {
    m.omitted = {"h_state", "h_state_action", "min_d", "state_dist", "mixing_time"};
    return m;
  }
  if (options.with_mixing_time) {
    try {
      m.mixing_time = mixing_time(chain, options.mixing_eps, options.mixing_cap);
    } catch (const NonMixingError&) {
      m.omitted.push_back("mixing_time");
    }
  } else {
    m.omitted.push_back("mixing_time");
  }
  return m;
}

namespace {

ObjectiveSolution exact_solve(const TabularMdp& mdp, ObjectiveKind kind, double xi, double zeta,
                              const SolverOptions& solver) {
  ObjectiveOptions o;
  o.xi = xi;
  o.zeta = zeta;
  o.solver = solver;
  o.evaluate_bound = false;
  return solve_objective(mdp, kind, o);
}

}  // namespace

std::vector<XiPoint> sweep_xi(const EnvSpec& env, ObjectiveKind kind, const std::vector<double>& xi_grid,
                              double zeta, const SolverOptions& solver) {
  const double max_xi = 1.0 / env.mdp.n_actions();
  std::vector<XiPoint> out;
  for (double xi : xi_grid) {
    if (!(xi >= 0.0 && xi <= max_xi + 1e-12)) throw ParameterError("sweep_xi: xi outside [0, 1/|A|]");
  }
  for (double xi : xi_grid) {
    const ObjectiveSolution sol = exact_solve(env.mdp, kind, xi, zeta, solver);
    const Distribution d = stationary_distribution(induce_chain(env.mdp, sol.policy));
    out.push_back({xi, d.entropy_normalized(),
                   state_action_distribution(env.mdp, sol.policy, d).entropy_normalized(), d.min(),
                   sol.objective_value});
  }
  return out;
}

std::vector<ZetaPoint> sweep_zeta(const EnvSpec& env, ObjectiveKind kind, const std::vector<double>& zeta_grid,
                                  double xi, bool keep_state_dist, const SolverOptions& solver) {
  if (kind != ObjectiveKind::Infinity && kind != ObjectiveKind::Frobenius) {
    throw ParameterError("sweep_zeta: zeta only applies to the infinity and frobenius objectives");
  }
  const double min_zeta = 1.0 / env.mdp.n_states();
  for (double z : zeta_grid) {
    if (!(z >= min_zeta - 1e-12 && z <= 1.0)) throw ParameterError("sweep_zeta: zeta outside [1/|S|, 1]");
  }
  std::vector<ZetaPoint> out;
  for (double z : zeta_grid) {
    const ObjectiveSolution sol = exact_solve(env.mdp, kind, xi, z, solver);
    const StateChain chain = induce_chain(env.mdp, sol.policy);
    const Distribution d = stationary_distribution(chain);
    ZetaPoint p{z, d.entropy_normalized(), spectral_info(chain).spectral_gap, d.min(), sol.objective_value,
                std::nullopt};
    if (keep_state_dist) p.state_dist = d.probs();
    out.push_back(std::move(p));
  }
  return out;
}

int hardest_state(const EnvSpec& env, std::uint64_t seed, long n_samples) {
  if (n_samples < 10000) throw ParameterError("hardest_state: at least 10000 samples are required");
  const TabularMdp& mdp = env.mdp;
  const PolicyTable uniform = PolicyTable::uniform(mdp.n_states(), mdp.n_actions());
  Sampler sampler(mdp, seed);
  std::vector<long> visits(mdp.n_states(), 0);
  for (long k = 0; k < n_samples; ++k) {
    ++visits[sampler.state()];
    sampler.step(sampler.sample_action(uniform));
  }
  return static_cast<int>(std::min_element(visits.begin(), visits.end()) - visits.begin());
}

std::vector<GoalTaskResult> goal_conditioned_eval(const EnvSpec& env, const PolicyTable& exploration_policy,
                                                  const std::vector<int>& horizons, int n_runs, double gamma,
                                                  std::uint64_t seed, const GoalOptions& options) {
  const TabularMdp& truth = env.mdp;
  const int n = truth.n_states();
  if (n_runs < 1) throw ParameterError("goal_conditioned_eval: n_runs must be positive");
  if (exploration_policy.n_states() != n || exploration_policy.n_actions() != truth.n_actions()) {
    throw ShapeError("goal_conditioned_eval: policy shape differs from the environment");
  }
  for (int h : horizons) {
    if (h < 0) throw ParameterError("goal_conditioned_eval: horizons must be nonnegative");
  }
  if (options.exploration_steps && *options.exploration_steps < 0) {
    throw ParameterError("goal_conditioned_eval: exploration_steps must be nonnegative");
  }
  const int goal = options.goal ? *options.goal : hardest_state(env, seed, options.hardest_samples);
  if (goal < 0 || goal >= n) throw ParameterError("goal_conditioned_eval: goal outside the state space");
  Vector reward = Vector::Zero(n);
  reward[goal] = 1.0;

  std::vector<GoalTaskResult> out;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    const int horizon = horizons[hi];
    const int budget = options.exploration_steps ? *options.exploration_steps : horizon;
    GoalTaskResult r;
    r.horizon = horizon;
    long successes = 0;
    double total_return = 0.0;
    for (int run = 0; run < n_runs; ++run) {
      const std::uint64_t run_seed = splitmix64(seed + 0x632be59bd9b4e019ULL * (hi + 1)) + static_cast<std::uint64_t>(run);
      Sampler explore_sampler(truth, run_seed);
      CountTable counts(n, truth.n_actions());
      for (int k = 0; k < budget; ++k) {
        const int s = explore_sampler.state();
        const int a = explore_sampler.sample_action(exploration_policy);
        counts.add(s, a, explore_sampler.step(a));
      }
      const ValueIterationResult vi = value_iteration(estimate_model(counts, options.planner_fallback), reward, gamma);
      const PolicyTable greedy = options.split_ties ? greedy_even_ties(vi.q) : vi.greedy;

      Sampler rollout(truth, ~run_seed);
      int tau = -1;
      for (int t = 0; t <= horizon; ++t) {
        if (rollout.state() == goal) {
          tau = t;
          break;
        }
        if (t < horizon) rollout.step(rollout.sample_action(greedy));
      }
      if (tau >= 0) {
        ++successes;
        total_return += std::pow(gamma, tau);
      }
    }
    r.success_rate = static_cast<double>(successes) / n_runs;
    r.mean_return = total_return / n_runs;
    out.push_back(r);
  }
  return out;
}

std::vector<TimingRow> solve_time_study(const std::vector<std::pair<int, int>>& sizes,
                                        const std::vector<ObjectiveKind>& kinds, std::uint64_t seed,
                                        const TimingOptions& options) {
  if (options.repeats < 1) throw ParameterError("solve_time_study: repeats must be positive");
  std::vector<TimingRow> out;
  std::vector<bool> over_budget(kinds.size(), false);
  for (const auto& [ns, na] : sizes) {
    const int branching = std::min(options.branching, ns);
    std::vector<EnvSpec> envs;
    for (int r = 0; r < options.repeats; ++r) envs.push_back(random_mdp(ns, na, branching, seed + r));
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      TimingRow row;
      row.n_states = ns;
      row.n_actions = na;
      row.kind = kinds[k];
      row.variables = variable_count(kinds[k], ns, na);
      row.seconds = std::numeric_limits<double>::quiet_NaN();
      if (over_budget[k]) {
        row.timed_out = true;
        out.push_back(row);
        continue;
      }
      std::vector<double> times;
      for (const EnvSpec& env : envs) {
        ObjectiveOptions o = options.objective;
        o.evaluate_bound = false;
        if (kinds[k] == ObjectiveKind::ColumnSum || kinds[k] == ObjectiveKind::Dual) o.zeta = 1.0;
        try {
          times.push_back(solve_objective(env.mdp, kinds[k], o).solve_seconds);
        } catch (const SolverError&) {
        }
      }
      row.repeats = static_cast<int>(times.size());
      if (!times.empty()) {
        std::sort(times.begin(), times.end());
        const std::size_t mid = times.size() / 2;
        row.seconds = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
        if (row.seconds > options.budget_seconds) {
          row.timed_out = true;
          over_budget[k] = true;
        }
      }
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace explore
