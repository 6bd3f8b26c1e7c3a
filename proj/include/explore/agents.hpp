#pragma once

// Learning agents: model estimation from transition counts, tabular value
// iteration, and the three exploration loops (iterative exact solves,
// entropy-gradient mixtures, count-based bonuses).

#include "explore/environments.hpp"
#include "explore/mdp.hpp"
#include "explore/objectives.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace explore {

/// Transition counts C(s,a,s') and state visit counts N(s). A visit is
/// counted at the state an action is taken from, so sum N = steps recorded.
class CountTable {
 public:
  CountTable(int n_states, int n_actions);

  void add(int s, int a, int next);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  long transitions(int s, int a, int next) const { return c_[index(s, a) * n_states_ + next]; }
  long pair_visits(int s, int a) const { return pair_[index(s, a)]; }
  long state_visits(int s) const { return n_[s]; }
  long total() const { return total_; }
  long min_pair_visits() const;

 private:
  int index(int s, int a) const { return s * n_actions_ + a; }

  int n_states_;
  int n_actions_;
  std::vector<long> c_;
  std::vector<long> pair_;
  std::vector<long> n_;
  long total_ = 0;
};

/// Row used for (s,a) pairs that were never tried.
enum class Fallback { Uniform, SelfLoop };

/// Empirical frequencies where counts exist, `fallback` elsewhere. The initial
/// distribution is uniform unless given.
TabularMdp estimate_model(const CountTable& counts, Fallback fallback,
                          const std::optional<Vector>& initial_dist = std::nullopt);

struct ValueIterationResult {
  Vector values;
  /// Action values at `values`, |S| x |A|.
  Matrix q;
  PolicyTable greedy;
  int iterations = 0;
};

/// Q(s,a) = R(s) + gamma sum_s' P(s'|s,a) V(s'), iterated until the sup-norm
/// change drops to `tol`. Greedy ties (within 1e-12) go to the lowest action.
ValueIterationResult value_iteration(const TabularMdp& mdp, const Vector& reward, double gamma = 0.99,
                                     double tol = 1e-8, const Vector* warm_start = nullptr);

/// Probability spread evenly over the actions within `tol` of each row max.
PolicyTable greedy_even_ties(const Matrix& q, double tol = 1e-12);

/// Greedy action (lowest index among maxima of each row) gets 1 - eps + eps/|A|.
PolicyTable epsilon_greedy(const PolicyTable& policy, double epsilon);

/// Weighted mixture of stationary policies; one component is drawn and then
/// followed for a whole batch.
class MixturePolicy {
 public:
  explicit MixturePolicy(PolicyTable first);

  /// alpha <- ((1 - eta) alpha, eta).
  void append(PolicyTable policy, double eta);

  const std::vector<PolicyTable>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

 private:
  std::vector<PolicyTable> components_;
  std::vector<double> weights_;
};

/// One row per iteration, all metrics measured on the true model.
struct RunRow {
  int iter = 0;
  long samples = 0;
  double h_state = 0.0;         ///< normalized
  double h_state_action = 0.0;  ///< normalized
  double min_d = 0.0;
  double gap = 0.0;
  double model_err_f = 0.0;
  double solve_ms = 0.0;
};

struct RunRecord {
  std::vector<RunRow> rows;
  /// "iteration: message" for every step whose planner failed.
  std::vector<std::string> failures;
  bool converged = false;
};

/// Header: iter,samples,h_state,h_state_action,min_d,gap,model_err_f,solve_ms
void write_run_csv(std::ostream& os, const RunRecord& record);
const std::vector<std::string>& run_csv_header();

struct IdealOptions {
  ObjectiveKind kind = ObjectiveKind::Frobenius;
  double xi = 0.1;
  double zeta = 0.7;
  int batch_n = 10;
  int max_iters = 300;
  std::uint64_t seed = 0;
  /// Plan on the true model instead of the estimate.
  bool oracle = false;
  double policy_tol = 1e-6;
  /// Every (s,a) must be tried this often before the run may stop early.
  int min_visits = 1;
  bool stop_on_convergence = true;
  SolverOptions solver;
};

struct IdealResult {
  PolicyTable policy;
  RunRecord record;
};

/// Alternates batches of sampling with exact solves on the re-estimated model
/// (uniform fallback). Row 0 is the solve on the all-uniform model.
IdealResult run_ideal(const EnvSpec& env, const IdealOptions& options);

struct CountBasedOptions {
  double epsilon = 0.1;
  int batch_n = 10;
  int max_iters = 300;
  std::uint64_t seed = 0;
  double gamma = 0.99;
};

struct CountBasedResult {
  PolicyTable policy;
  RunRecord record;
};

/// Reward 1/(N(s)+1) on the estimated model, epsilon-greedy planning.
CountBasedResult run_countbased(const EnvSpec& env, const CountBasedOptions& options);

struct MaxEntOptions {
  double epsilon = 0.1;
  double eta = 0.02;
  int batch_n = 10;
  int max_iters = 300;
  std::uint64_t seed = 0;
  double gamma = 0.99;
  /// Use visit frequencies instead of the model-based mixture distribution.
  bool empirical_density = false;
};

struct MaxEntResult {
  MixturePolicy mixture;
  RunRecord record;
};

/// Entropy-gradient rewards on the estimated model (self-loop fallback); each
/// iteration appends an epsilon-greedy component to the mixture.
MaxEntResult run_maxent(const EnvSpec& env, const MaxEntOptions& options);

/// Uniform random policy throughout; model error tracked with uniform fallback.
RunRecord run_random_baseline(const EnvSpec& env, int batch_n, int max_iters, std::uint64_t seed);

/// State distribution of a mixture on `mdp`: the alpha-weighted average of
/// component stationary distributions (damped when `damped`), skipping weights
/// below 1e-15.
Vector mixture_state_distribution(const TabularMdp& mdp, const MixturePolicy& mixture, bool damped);

}  // namespace explore
