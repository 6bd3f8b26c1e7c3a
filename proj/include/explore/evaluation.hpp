#pragma once

// Metrics against ground-truth models, parameter sweeps, the goal-reaching
// downstream task and solve-time scaling.

#include "explore/agents.hpp"
#include "explore/environments.hpp"
#include "explore/mdp.hpp"
#include "explore/objectives.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace explore {

/// Entropy lower bounds in nats, one per objective family.
struct EntropyBounds {
  double infinity = 0.0;
  double frobenius = 0.0;
  double column_sum = 0.0;
  double max() const;
};

/// Metrics of a policy on the true model. Fields that need a unique
/// stationary distribution are empty for non-ergodic chains and named in
/// `omitted`.
struct PolicyMetrics {
  std::optional<double> h_state;         ///< normalized
  std::optional<double> h_state_nats;
  std::optional<double> h_state_action;  ///< normalized
  std::optional<double> min_d;
  std::optional<Vector> state_dist;
  double spectral_gap = 0.0;
  std::optional<int> mixing_time;
  EntropyBounds bounds;
  std::vector<std::string> omitted;
};

struct EvaluateOptions {
  bool with_mixing_time = true;
  double mixing_eps = 0.25;
  int mixing_cap = 100000;
  bool with_bounds = true;
};

PolicyMetrics evaluate_policy(const EnvSpec& env, const PolicyTable& policy, const EvaluateOptions& options = {});

struct XiPoint {
  double xi = 0.0;
  double h_state = 0.0;
  double h_state_action = 0.0;
  double min_d = 0.0;
  double objective = 0.0;
};

/// One exact solve per grid value. Grid values must lie in [0, 1/|A|].
std::vector<XiPoint> sweep_xi(const EnvSpec& env, ObjectiveKind kind, const std::vector<double>& xi_grid,
                              double zeta, const SolverOptions& solver = {});

struct ZetaPoint {
  double zeta = 0.0;
  double h_state = 0.0;
  double spectral_gap = 0.0;
  double min_d = 0.0;
  double objective = 0.0;
  /// Stationary distribution, kept when requested (heatmaps).
  std::optional<Vector> state_dist;
};

/// Grid values must lie in [1/|S|, 1]; kind must be Infinity or Frobenius.
std::vector<ZetaPoint> sweep_zeta(const EnvSpec& env, ObjectiveKind kind, const std::vector<double>& zeta_grid,
                                  double xi, bool keep_state_dist = false, const SolverOptions& solver = {});

/// Least visited state over `n_samples` uniform-random steps from d0 (counted
/// at the state each action is taken from); ties go to the lowest index.
int hardest_state(const EnvSpec& env, std::uint64_t seed, long n_samples = 100000);

struct GoalTaskResult {
  int horizon = 0;
  /// Mean of gamma^tau over runs, with tau the first arrival step (0 if missed).
  double mean_return = 0.0;
  double success_rate = 0.0;
};

struct GoalOptions {
  /// Goal state; the hardest state under a random policy when empty.
  std::optional<int> goal;
  /// Exploration steps per run; the horizon when empty.
  std::optional<int> exploration_steps;
  long hardest_samples = 100000;
  /// Unseen (s,a) pairs stay put, so the planner never counts on transitions
  /// it has not observed.
  Fallback planner_fallback = Fallback::SelfLoop;
  /// Roll out with probability split over tied greedy actions instead of the
  /// lowest index, so an uninformed model carries no direction.
  bool split_ties = true;
};

/// For each horizon and run: explore for that many steps from d0, estimate the
/// model, plan for reward 1 at the goal, then roll the greedy policy out on the
/// true model for `horizon` steps from d0. Success is arrival within the horizon.
std::vector<GoalTaskResult> goal_conditioned_eval(const EnvSpec& env, const PolicyTable& exploration_policy,
                                                  const std::vector<int>& horizons, int n_runs, double gamma,
                                                  std::uint64_t seed, const GoalOptions& options = {});

struct TimingRow {
  int n_states = 0;
  int n_actions = 0;
  ObjectiveKind kind = ObjectiveKind::ColumnSum;
  long variables = 0;
  /// Median over repeats; NaN when every repeat failed or was skipped.
  double seconds = 0.0;
  int repeats = 0;
  bool timed_out = false;
};

struct TimingOptions {
  int repeats = 5;
  int branching = 5;
  /// A kind whose median exceeds this is skipped on larger instances.
  double budget_seconds = 60.0;
  ObjectiveOptions objective;
};

/// Wall-clock solve times on random MDPs; repeat r uses seed + r.
std::vector<TimingRow> solve_time_study(const std::vector<std::pair<int, int>>& sizes,
                                        const std::vector<ObjectiveKind>& kinds, std::uint64_t seed,
                                        const TimingOptions& options = {});

}  // namespace explore
