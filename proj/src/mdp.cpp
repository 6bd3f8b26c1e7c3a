#include "explore/mdp.hpp"

#include "explore/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <sstream>

namespace explore {

namespace {

void check_probability_rows(const Matrix& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!(v >= 0.0) || v > 1.0 + kProbabilityTol) {
        std::ostringstream os;
        os << what << ": entry (" << r << ", " << c << ") = " << v << " is not a probability";
        throw InvalidDistributionError(os.str());
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kProbabilityTol) {
      std::ostringstream os;
      os << what << ": row " << r << " sums to " << sum;
      throw InvalidDistributionError(os.str());
    }
  }
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, Matrix transition, Vector initial_dist)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      initial_dist_(std::move(initial_dist)) {
  if (n_states_ <= 0 || n_actions_ <= 0) throw ShapeError("TabularMdp: empty state or action set");
  if (transition_.rows() != static_cast<Eigen::Index>(n_states_) * n_actions_ ||
      transition_.cols() != n_states_) {
    throw ShapeError("TabularMdp: transition must be (|S||A|) x |S|");
  }
  if (initial_dist_.size() != n_states_) throw ShapeError("TabularMdp: initial distribution size");
  check_probability_rows(transition_, "TabularMdp transition");
  check_probability_rows(initial_dist_.transpose(), "TabularMdp initial distribution");
}

PolicyTable::PolicyTable(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0) throw ShapeError("PolicyTable: empty shape");
  check_probability_rows(probs_, "PolicyTable");
}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  return PolicyTable(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

PolicyTable PolicyTable::deterministic(const std::vector<int>& actions, int n_actions) {
  Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) throw ShapeError("PolicyTable: action out of range");
    probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return PolicyTable(std::move(probs));
}

double PolicyTable::max_abs_diff(const PolicyTable& other) const {
  if (other.probs_.rows() != probs_.rows() || other.probs_.cols() != probs_.cols()) {
    throw ShapeError("PolicyTable: shape mismatch");
  }
  return (probs_ - other.probs_).cwiseAbs().maxCoeff();
}

StateChain::StateChain(Matrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) throw ShapeError("StateChain: matrix must be square");
  check_probability_rows(matrix_, "StateChain");
}

EntropyValue entropy(const Vector& probs) {
  if (probs.size() == 0) throw InvalidDistributionError("entropy: empty vector");
  double sum = 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0)) throw InvalidDistributionError("entropy: negative or NaN entry");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > kProbabilityTol) {
    std::ostringstream os;
    os << "entropy: vector sums to " << sum;
    throw InvalidDistributionError(os.str());
  }
  h = std::max(h, 0.0);
  EntropyValue out;
  out.nats = h;
  out.normalized = probs.size() == 1 ? 1.0 : h / std::log(static_cast<double>(probs.size()));
  return out;
}

Distribution::Distribution(Vector probs) : probs_(std::move(probs)), entropy_(entropy(probs_)) {}

StateChain induce_chain(const TabularMdp& mdp, const PolicyTable& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw ShapeError("induce_chain: policy shape does not match the MDP");
  }
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  Matrix chain = Matrix::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) {
      const double w = policy(s, a);
      if (w != 0.0) chain.row(s) += w * mdp.row(s, a);
    }
  }
  return StateChain(std::move(chain));
}

Distribution stationary_distribution(const StateChain& chain, double tol, int max_iter) {
  const int n = chain.n_states();
  const Matrix pt = chain.matrix().transpose();
  Vector d = Vector::Constant(n, 1.0 / n);
  Vector next(n);

  // Recent iterates, kept to tell a periodic orbit from slow convergence.
  const std::size_t window = static_cast<std::size_t>(std::min(n, 256)) + 1;
  std::deque<Vector> recent;

  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    next.noalias() = pt * d;
    residual = (next - d).lpNorm<1>();
    if (residual <= tol) return Distribution(d / d.sum());
    d = next / next.sum();
    recent.push_back(d);
    if (recent.size() > window) recent.pop_front();
  }

  bool periodic = false;
  if (recent.size() > 2) {
    const Vector& last = recent.back();
    for (std::size_t lag = 2; lag < recent.size(); ++lag) {
      const double diff = (last - recent[recent.size() - 1 - lag]).lpNorm<1>();
      if (diff <= std::max(tol, 1e-6 * residual)) {
        periodic = true;
        break;
      }
    }
  }
  std::ostringstream os;
  os << "stationary_distribution: no convergence after " << max_iter
     << " iterations (residual " << residual << (periodic ? ", periodic orbit)" : ")");
  throw NonErgodicError(periodic ? NonErgodicError::Reason::Periodic : NonErgodicError::Reason::NotConverged,
                        residual, os.str());
}

Vector damped_stationary(const StateChain& chain, double damping) {
  if (!(damping >= 0.0 && damping < 1.0)) throw ParameterError("damped_stationary: damping must lie in [0, 1)");
  const int n = chain.n_states();
  Matrix system = Matrix::Identity(n, n) - damping * chain.matrix().transpose();
  Vector rhs = Vector::Constant(n, (1.0 - damping) / n);
  Vector d = system.partialPivLu().solve(rhs);
  d = d.cwiseMax(0.0);
  return d / d.sum();
}

Distribution state_action_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                       const Distribution& d) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() ||
      d.size() != mdp.n_states()) {
    throw ShapeError("state_action_distribution: shape mismatch");
  }
  const int na = policy.n_actions();
  Vector omega(static_cast<Eigen::Index>(d.size()) * na);
  for (int s = 0; s < d.size(); ++s) {
    for (int a = 0; a < na; ++a) omega[s * na + a] = d[s] * policy(s, a);
  }
  return Distribution(omega / omega.sum());
}

SpectralInfo spectral_info(const StateChain& chain) {
  const int n = chain.n_states();
  SpectralInfo info;
  if (n == 1) {
    info.slem = 0.0;
    info.spectral_gap = 1.0;
    info.reversible = true;
    return info;
  }

  Eigen::EigenSolver<Matrix> solver(chain.matrix(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericError("spectral_info: eigenvalue iteration failed to converge");
  }
  const auto& eig = solver.eigenvalues();

  // Drop one copy of the Perron root; any further eigenvalue at 1 counts.
  Eigen::Index perron = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double dist = std::abs(eig[i] - std::complex<double>(1.0, 0.0));
    if (dist < best) {
      best = dist;
      perron = i;
    }
  }
  if (best > 1e-6) {
    std::ostringstream os;
    os << "spectral_info: no eigenvalue near 1 (closest at distance " << best << ")";
    throw NumericError(os.str());
  }
  double slem = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (i != perron) slem = std::max(slem, std::abs(eig[i]));
  }
  info.slem = std::clamp(slem, 0.0, 1.0);
  info.spectral_gap = 1.0 - info.slem;

  try {
    const Distribution d = stationary_distribution(chain);
    const Matrix& p = chain.matrix();
    info.reversible = true;
    for (int s = 0; s < n && info.reversible; ++s) {
      for (int t = s + 1; t < n; ++t) {
        if (std::abs(d[s] * p(s, t) - d[t] * p(t, s)) > 1e-7) {
          info.reversible = false;
          break;
        }
      }
    }
  } catch (const NonErgodicError&) {
    info.reversible = false;
  }
  return info;
}

int mixing_time(const StateChain& chain, double eps, int t_cap) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("mixing_time: eps must lie in (0, 1)");
  const int n = chain.n_states();
  const Distribution stationary = stationary_distribution(chain);
  const Eigen::RowVectorXd d = stationary.probs().transpose();

  Matrix power = Matrix::Identity(n, n);
  Matrix scratch(n, n);
  for (int t = 0; t <= t_cap; ++t) {
    double worst = 0.0;
    for (int s = 0; s < n; ++s) worst = std::max(worst, 0.5 * (power.row(s) - d).lpNorm<1>());
    if (worst <= eps) return t;
    scratch.noalias() = power * chain.matrix();
    power.swap(scratch);
  }
  std::ostringstream os;
  os << "mixing_time: distance above " << eps << " after " << t_cap << " steps";
  throw NonMixingError(os.str());
}

double matrix_distance(const Matrix& a, const Matrix& b, MatrixDistance kind) {
  if (kind == MatrixDistance::ColumnSumDeficit) {
    if (a.rows() != a.cols()) throw ShapeError("matrix_distance: column-sum deficit needs a square matrix");
    return (Vector::Ones(a.cols()) - a.colwise().sum().transpose()).lpNorm<1>();
  }
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("matrix_distance: shape mismatch");
  const Matrix diff = a - b;
  switch (kind) {
    case MatrixDistance::Infinity:
      return diff.rows() == 0 ? 0.0 : diff.cwiseAbs().rowwise().sum().maxCoeff();
    case MatrixDistance::Frobenius:
      return diff.norm();
    case MatrixDistance::ColumnSumDeficit:
      break;
  }
  return 0.0;
}

double model_error(const TabularMdp& truth, const TabularMdp& estimate) {
  if (truth.n_states() != estimate.n_states() || truth.n_actions() != estimate.n_actions()) {
    throw ShapeError("model_error: shape mismatch");
  }
  return (truth.transition() - estimate.transition()).norm();
}

}  // namespace explore
