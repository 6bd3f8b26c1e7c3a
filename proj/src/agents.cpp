#include "explore/agents.hpp"

#include "explore/errors.hpp"
#include "explore/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace explore {

CountTable::CountTable(int n_states, int n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      c_(static_cast<std::size_t>(n_states) * n_actions * n_states, 0),
      pair_(static_cast<std::size_t>(n_states) * n_actions, 0),
      n_(n_states, 0) {
  if (n_states < 1 || n_actions < 1) throw ShapeError("CountTable: empty state or action set");
}

void CountTable::add(int s, int a, int next) {
  if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_ || next < 0 || next >= n_states_) {
    throw ShapeError("CountTable::add: index out of range");
  }
  ++c_[static_cast<std::size_t>(index(s, a)) * n_states_ + next];
  ++pair_[index(s, a)];
  ++n_[s];
  ++total_;
}

long CountTable::min_pair_visits() const { return *std::min_element(pair_.begin(), pair_.end()); }

TabularMdp estimate_model(const CountTable& counts, Fallback fallback, const std::optional<Vector>& initial_dist) {
  const int n = counts.n_states();
  const int na = counts.n_actions();
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(n) * na, n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) {
      const int r = s * na + a;
      const long total = counts.pair_visits(s, a);
      if (total == 0) {
        if (fallback == Fallback::Uniform) {
          p.row(r).setConstant(1.0 / n);
        } else {
          p(r, s) = 1.0;
        }
        continue;
      }
      for (int t = 0; t < n; ++t) p(r, t) = static_cast<double>(counts.transitions(s, a, t)) / total;
    }
  }
  Vector d0 = initial_dist ? *initial_dist : Vector::Constant(n, 1.0 / n);
  return TabularMdp(n, na, std::move(p), std::move(d0));
}

namespace {

constexpr double kTieTol = 1e-12;

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int a = 1; a < row.size(); ++a) {
    if (row[a] > row[best] + kTieTol) best = a;
  }
  return best;
}

}  // namespace

ValueIterationResult value_iteration(const TabularMdp& mdp, const Vector& reward, double gamma, double tol,
                                     const Vector* warm_start) {
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  if (reward.size() != n) throw ShapeError("value_iteration: reward length differs from |S|");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("value_iteration: gamma must lie in (0, 1)");
  if (!(tol > 0.0)) throw ParameterError("value_iteration: tol must be positive");

  ValueIterationResult out;
  Vector v = Vector::Zero(n);
  if (warm_start && warm_start->size() == n) v = *warm_start;
  Matrix q(n, na);
  for (int it = 1;; ++it) {
    const Vector expect = mdp.transition() * v;
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < na; ++a) q(s, a) = reward[s] + gamma * expect[s * na + a];
    }
    const Vector next = q.rowwise().maxCoeff();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    out.iterations = it;
    if (change <= tol || !std::isfinite(change)) break;
  }
  if (!v.allFinite()) throw NumericError("value_iteration: values diverged");

  const Vector expect = mdp.transition() * v;
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) q(s, a) = reward[s] + gamma * expect[s * na + a];
  }
  std::vector<int> actions(n);
  for (int s = 0; s < n; ++s) actions[s] = argmax_lowest(q.row(s));
  out.values = std::move(v);
  out.q = std::move(q);
  out.greedy = PolicyTable::deterministic(actions, na);
  return out;
}

PolicyTable greedy_even_ties(const Matrix& q, double tol) {
  Matrix probs = Matrix::Zero(q.rows(), q.cols());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const double best = q.row(s).maxCoeff();
    for (Eigen::Index a = 0; a < q.cols(); ++a) probs(s, a) = q(s, a) >= best - tol ? 1.0 : 0.0;
    probs.row(s) /= probs.row(s).sum();
  }
  return PolicyTable(std::move(probs));
}

PolicyTable epsilon_greedy(const PolicyTable& policy, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ParameterError("epsilon_greedy: epsilon must lie in [0, 1]");
  const int na = policy.n_actions();
  Matrix probs = Matrix::Constant(policy.n_states(), na, epsilon / na);
  for (int s = 0; s < policy.n_states(); ++s) {
    probs(s, argmax_lowest(policy.probs().row(s))) += 1.0 - epsilon;
  }
  return PolicyTable(std::move(probs));
}

MixturePolicy::MixturePolicy(PolicyTable first) {
  components_.push_back(std::move(first));
  weights_.push_back(1.0);
}

void MixturePolicy::append(PolicyTable policy, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("MixturePolicy::append: eta must lie in (0, 1)");
  if (policy.n_states() != components_.front().n_states() ||
      policy.n_actions() != components_.front().n_actions()) {
    throw ShapeError("MixturePolicy::append: component shape differs");
  }
  for (double& w : weights_) w *= 1.0 - eta;
  components_.push_back(std::move(policy));
  weights_.push_back(eta);
}

Vector mixture_state_distribution(const TabularMdp& mdp, const MixturePolicy& mixture, bool damped) {
  Vector d = Vector::Zero(mdp.n_states());
  double mass = 0.0;
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    const double w = mixture.weights()[i];
    if (w < 1e-15) continue;
    const StateChain chain = induce_chain(mdp, mixture.components()[i]);
    d += w * (damped ? damped_stationary(chain) : stationary_distribution(chain).probs());
    mass += w;
  }
  return d / mass;
}

const std::vector<std::string>& run_csv_header() {
  static const std::vector<std::string> header{"iter",  "samples", "h_state",     "h_state_action",
                                               "min_d", "gap",     "model_err_f", "solve_ms"};
  return header;
}

void write_run_csv(std::ostream& os, const RunRecord& record) {
  CsvWriter csv(os, run_csv_header());
  for (const RunRow& r : record.rows) {
    csv.row({std::to_string(r.iter), std::to_string(r.samples), format_number(r.h_state),
             format_number(r.h_state_action), format_number(r.min_d), format_number(r.gap),
             format_number(r.model_err_f), format_number(r.solve_ms, 6)});
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stationary metrics of `policy` on the true model; NaN where undefined.
void fill_metrics(RunRow& row, const TabularMdp& truth, const PolicyTable& policy) {
  row.h_state = row.h_state_action = row.min_d = row.gap = kNaN;
  const StateChain chain = induce_chain(truth, policy);
  try {
    const Distribution d = stationary_distribution(chain);
    row.h_state = d.entropy_normalized();
    row.min_d = d.min();
    row.h_state_action = state_action_distribution(truth, policy, d).entropy_normalized();
  } catch (const NonErgodicError&) {
    return;
  }
  try {
    row.gap = spectral_info(chain).spectral_gap;
  } catch (const NumericError&) {
  }
}

void check_batch(int batch_n, int max_iters, const char* who) {
  if (batch_n < 1) throw ParameterError(std::string(who) + ": batch_n must be positive");
  if (max_iters < 0) throw ParameterError(std::string(who) + ": max_iters must be nonnegative");
}

void collect(Sampler& sampler, const PolicyTable& policy, int steps, CountTable& counts) {
  for (int k = 0; k < steps; ++k) {
    const int s = sampler.state();
    const int a = sampler.sample_action(policy);
    counts.add(s, a, sampler.step(a));
  }
}

PolicyTable solve_policy(const TabularMdp& model, const IdealOptions& o, bool& failed, std::string& message) {
  ObjectiveOptions opts;
  opts.xi = o.xi;
  opts.zeta = o.zeta;
  opts.solver = o.solver;
  opts.evaluate_bound = false;
  failed = false;
  try {
    return solve_objective(model, o.kind, opts).policy;
  } catch (const Error& e) {
    failed = true;
    message = e.what();
    return PolicyTable();
  }
}

}  // namespace

IdealResult run_ideal(const EnvSpec& env, const IdealOptions& options) {
  check_batch(options.batch_n, options.max_iters, "run_ideal");
  const TabularMdp& truth = env.mdp;
  const int n = truth.n_states();
  const int na = truth.n_actions();
  CountTable counts(n, na);
  Sampler sampler(truth, options.seed);
  IdealResult out;

  const auto start = Clock::now();
  bool failed = false;
  std::string message;
  PolicyTable policy = solve_policy(options.oracle ? truth : estimate_model(counts, Fallback::Uniform), options,
                                    failed, message);
  if (failed) throw SolverError("run_ideal: initial solve failed: " + message);

  RunRow row;
  row.solve_ms = ms_since(start);
  row.model_err_f = model_error(truth, estimate_model(counts, Fallback::Uniform));
  fill_metrics(row, truth, policy);
  out.record.rows.push_back(row);

  for (int it = 1; it <= options.max_iters; ++it) {
    collect(sampler, policy, options.batch_n, counts);
    const TabularMdp model = estimate_model(counts, Fallback::Uniform);
    const auto t0 = Clock::now();
    PolicyTable next = solve_policy(options.oracle ? truth : model, options, failed, message);
    row = RunRow{};
    row.solve_ms = ms_since(t0);
    double change = std::numeric_limits<double>::infinity();
    if (failed) {
      out.record.failures.push_back(std::to_string(it) + ": " + message);
    } else {
      change = policy.max_abs_diff(next);
      policy = std::move(next);
    }
    row.iter = it;
    row.samples = static_cast<long>(it) * options.batch_n;
    row.model_err_f = model_error(truth, model);
    fill_metrics(row, truth, policy);
    out.record.rows.push_back(row);
    if (options.stop_on_convergence && change <= options.policy_tol &&
        counts.min_pair_visits() >= options.min_visits) {
      out.record.converged = true;
      break;
    }
  }
  out.policy = std::move(policy);
  return out;
}

CountBasedResult run_countbased(const EnvSpec& env, const CountBasedOptions& options) {
  check_batch(options.batch_n, options.max_iters, "run_countbased");
  const TabularMdp& truth = env.mdp;
  const int n = truth.n_states();
  CountTable counts(n, truth.n_actions());
  Sampler sampler(truth, options.seed);
  CountBasedResult out;
  PolicyTable policy = PolicyTable::uniform(n, truth.n_actions());

  RunRow row;
  row.model_err_f = model_error(truth, estimate_model(counts, Fallback::Uniform));
  fill_metrics(row, truth, policy);
  out.record.rows.push_back(row);

  Vector values;
  for (int it = 1; it <= options.max_iters; ++it) {
    collect(sampler, policy, options.batch_n, counts);
    const TabularMdp model = estimate_model(counts, Fallback::Uniform);
    Vector reward(n);
    for (int s = 0; s < n; ++s) reward[s] = 1.0 / (static_cast<double>(counts.state_visits(s)) + 1.0);
    const auto t0 = Clock::now();
    ValueIterationResult vi = value_iteration(model, reward, options.gamma, 1e-8, values.size() ? &values : nullptr);
    policy = epsilon_greedy(vi.greedy, options.epsilon);
    values = std::move(vi.values);
    row = RunRow{};
    row.solve_ms = ms_since(t0);
    row.iter = it;
    row.samples = static_cast<long>(it) * options.batch_n;
    row.model_err_f = model_error(truth, model);
    fill_metrics(row, truth, policy);
    out.record.rows.push_back(row);
  }
  out.policy = std::move(policy);
  return out;
}

namespace {

// Metrics of a mixture on the true model. Component stationary vectors are
// cached since the true model never changes.
class MixtureMetrics {
 public:
  explicit MixtureMetrics(const TabularMdp& truth) : truth_(truth) {}

  void fill(RunRow& row, const MixturePolicy& mixture) {
    row.h_state = row.h_state_action = row.min_d = row.gap = kNaN;
    while (cache_.size() < mixture.size()) {
      const PolicyTable& pi = mixture.components()[cache_.size()];
      try {
        cache_.push_back(stationary_distribution(induce_chain(truth_, pi)).probs());
      } catch (const NonErgodicError&) {
        cache_.push_back(Vector());
      }
    }
    const int n = truth_.n_states();
    const int na = truth_.n_actions();
    Vector d = Vector::Zero(n);
    Matrix omega = Matrix::Zero(n, na);
    for (std::size_t i = 0; i < mixture.size(); ++i) {
      const double w = mixture.weights()[i];
      if (w < 1e-15) continue;
      if (cache_[i].size() == 0) return;
      d += w * cache_[i];
      omega += w * (cache_[i].asDiagonal() * mixture.components()[i].probs());
    }
    d /= d.sum();
    omega /= omega.sum();
    row.h_state = entropy(d).normalized;
    row.min_d = d.minCoeff();
    row.h_state_action = entropy(omega.reshaped<Eigen::RowMajor>()).normalized;
    // The Markov policy omega(s,.)/d(s) has the mixture's occupancy as its
    // stationary measure; its chain stands in for the mixture's mixing rate.
    Matrix mean = omega;
    for (int s = 0; s < n; ++s) {
      const double z = mean.row(s).sum();
      if (z > 0.0) {
        mean.row(s) /= z;
      } else {
        mean.row(s).setConstant(1.0 / na);
      }
    }
    try {
      row.gap = spectral_info(induce_chain(truth_, PolicyTable(mean))).spectral_gap;
    } catch (const NumericError&) {
    }
  }

 private:
  const TabularMdp& truth_;
  std::vector<Vector> cache_;
};

}  // namespace

MaxEntResult run_maxent(const EnvSpec& env, const MaxEntOptions& options) {
  check_batch(options.batch_n, options.max_iters, "run_maxent");
  if (!(options.eta > 0.0 && options.eta < 1.0)) throw ParameterError("run_maxent: eta must lie in (0, 1)");
  const TabularMdp& truth = env.mdp;
  const int n = truth.n_states();
  CountTable counts(n, truth.n_actions());
  Sampler sampler(truth, options.seed);
  MaxEntResult out{MixturePolicy(PolicyTable::uniform(n, truth.n_actions())), {}};
  MixtureMetrics metrics(truth);

  RunRow row;
  row.model_err_f = model_error(truth, estimate_model(counts, Fallback::SelfLoop));
  metrics.fill(row, out.mixture);
  out.record.rows.push_back(row);

  const double unvisited = std::log(static_cast<double>(n));
  Vector values;
  for (int it = 1; it <= options.max_iters; ++it) {
    const auto& w = out.mixture.weights();
    const int pick = sampler.rng().categorical(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
    collect(sampler, out.mixture.components()[pick], options.batch_n, counts);
    const TabularMdp model = estimate_model(counts, Fallback::SelfLoop);

    const auto t0 = Clock::now();
    Vector d(n);
    if (options.empirical_density) {
      for (int s = 0; s < n; ++s) d[s] = static_cast<double>(counts.state_visits(s)) / counts.total();
    } else {
      d = mixture_state_distribution(model, out.mixture, true);
    }
    Vector reward(n);
    for (int s = 0; s < n; ++s) {
      reward[s] = counts.state_visits(s) > 0 ? -std::log(std::max(d[s], 1e-12)) - 1.0 : unvisited;
    }
    ValueIterationResult vi = value_iteration(model, reward, options.gamma, 1e-8, values.size() ? &values : nullptr);
    out.mixture.append(epsilon_greedy(vi.greedy, options.epsilon), options.eta);
    values = std::move(vi.values);

    row = RunRow{};
    row.solve_ms = ms_since(t0);
    row.iter = it;
    row.samples = static_cast<long>(it) * options.batch_n;
    row.model_err_f = model_error(truth, model);
    metrics.fill(row, out.mixture);
    out.record.rows.push_back(row);
  }
  return out;
}

RunRecord run_random_baseline(const EnvSpec& env, int batch_n, int max_iters, std::uint64_t seed) {
  check_batch(batch_n, max_iters, "run_random_baseline");
  const TabularMdp& truth = env.mdp;
  CountTable counts(truth.n_states(), truth.n_actions());
  Sampler sampler(truth, seed);
  const PolicyTable policy = PolicyTable::uniform(truth.n_states(), truth.n_actions());
  RunRecord record;
  RunRow row;
  fill_metrics(row, truth, policy);
  for (int it = 0; it <= max_iters; ++it) {
    if (it > 0) collect(sampler, policy, batch_n, counts);
    row.iter = it;
    row.samples = static_cast<long>(it) * batch_n;
    row.model_err_f = model_error(truth, estimate_model(counts, Fallback::Uniform));
    record.rows.push_back(row);
  }
  return record;
}

}  // namespace explore
