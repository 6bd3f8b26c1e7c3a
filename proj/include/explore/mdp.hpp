#pragma once

// Tabular MDPs, stationary policies and the Markov chains they induce.
//
// Transition tensors are stored as an (|S|*|A|) x |S| row-stochastic matrix
// whose row s*|A| + a holds P(. | s, a). All probabilities are doubles and all
// entropies use the natural logarithm.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace explore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-sum / column-sum tolerance for probability objects.
inline constexpr double kProbabilityTol = 1e-9;

class TabularMdp {
 public:
  /// `transition` is (|S|*|A|) x |S|; throws InvalidDistributionError unless
  /// every row and the initial distribution are probability vectors.
  TabularMdp(int n_states, int n_actions, Matrix transition, Vector initial_dist);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double p(int s, int a, int next) const { return transition_(row_index(s, a), next); }
  int row_index(int s, int a) const { return s * n_actions_ + a; }

  const Matrix& transition() const { return transition_; }
  auto row(int s, int a) const { return transition_.row(row_index(s, a)); }
  const Vector& initial_dist() const { return initial_dist_; }

 private:
  int n_states_;
  int n_actions_;
  Matrix transition_;
  Vector initial_dist_;
};

/// Stochastic policy pi(a|s) as an |S| x |A| row-stochastic matrix.
class PolicyTable {
 public:
  /// Single state, single action.
  PolicyTable() : probs_(Matrix::Ones(1, 1)) {}
  explicit PolicyTable(Matrix probs);

  static PolicyTable uniform(int n_states, int n_actions);
  static PolicyTable deterministic(const std::vector<int>& actions, int n_actions);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Matrix& probs() const { return probs_; }

  double min_prob() const { return probs_.minCoeff(); }
  /// Largest absolute entry-wise difference.
  double max_abs_diff(const PolicyTable& other) const;

 private:
  Matrix probs_;
};

/// Row-stochastic |S| x |S| state-to-state matrix P^pi.
class StateChain {
 public:
  explicit StateChain(Matrix matrix);

  int n_states() const { return static_cast<int>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }

 private:
  Matrix matrix_;
};

struct EntropyValue {
  double nats = 0.0;
  /// nats / ln(n); a length-one vector counts as perfectly spread (1.0).
  double normalized = 0.0;
};

/// Probability vector with its entropy precomputed.
class Distribution {
 public:
  explicit Distribution(Vector probs);

  const Vector& probs() const { return probs_; }
  double operator[](int i) const { return probs_[i]; }
  int size() const { return static_cast<int>(probs_.size()); }
  double entropy_nats() const { return entropy_.nats; }
  double entropy_normalized() const { return entropy_.normalized; }
  double min() const { return probs_.minCoeff(); }

 private:
  Vector probs_;
  EntropyValue entropy_;
};

struct SpectralInfo {
  double slem = 0.0;          ///< second largest eigenvalue modulus
  double spectral_gap = 0.0;  ///< 1 - slem
  bool reversible = false;
};

enum class MatrixDistance { Infinity, Frobenius, ColumnSumDeficit };

StateChain induce_chain(const TabularMdp& mdp, const PolicyTable& policy);

/// Power iteration from the uniform vector. Throws NonErgodicError when the
/// L1 fixed-point residual does not drop below `tol` within `max_iter` steps.
Distribution stationary_distribution(const StateChain& chain, double tol = 1e-10,
                                     int max_iter = 100000);

/// Stationary vector of damping*P + (1-damping)*uniform restart, by a direct
/// linear solve. Always defined; used on estimated models that may be reducible.
Vector damped_stationary(const StateChain& chain, double damping = 0.999);

/// Throws InvalidDistributionError on negative entries or a sum away from 1.
EntropyValue entropy(const Vector& probs);

/// omega(s,a) = d(s) pi(a|s), flattened as s*|A| + a.
Distribution state_action_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                       const Distribution& d);

SpectralInfo spectral_info(const StateChain& chain);

/// Smallest t with max_s TV(e_s P^t, d) <= eps. Throws NonMixingError past t_cap.
int mixing_time(const StateChain& chain, double eps = 0.25, int t_cap = 100000);

/// For ColumnSumDeficit `b` is ignored and the result is ||(I - a^T) 1||_1.
double matrix_distance(const Matrix& a, const Matrix& b, MatrixDistance kind);

/// sqrt of the summed squared differences of two transition tensors.
double model_error(const TabularMdp& truth, const TabularMdp& estimate);

}  // namespace explore
