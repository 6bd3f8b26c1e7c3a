// Dense two-phase tableau simplex.
//
// The general problem is brought to standard form min c'x, Ax = b, x >= 0,
// b >= 0 by shifting finite lower bounds, mirroring upper-only variables,
// splitting free ones and adding rows for two-sided bounds. Every row gets an
// artificial column; these stay in the tableau after phase one so that the
// equality duals can be read off their reduced costs, and so that the basis
// inverse is always at hand.
//
// Occupancy-type polytopes are massively degenerate (most right-hand sides are
// zero) and stall even under Bland's rule. Each phase therefore runs with the
// basic values nudged up by tiny distinct amounts; the exact values are
// restored from the basis inverse afterwards.

#include "explore/errors.hpp"
#include "explore/optimize.hpp"
#include "explore/rng.hpp"
#include "solver_detail.hpp"

#include <cmath>
#include <sstream>

namespace explore {

using Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kPriceTol = 1e-9;
constexpr int kDegenerateRun = 50;
constexpr double kPerturbation = 1e-9;

struct VarMap {
  int col = -1;       // column of x' (or x+ for a free variable)
  int neg_col = -1;   // column of x- for a free variable
  double shift = 0.0;
  double sign = 1.0;  // x = shift + sign * x' - x-
};

struct StandardForm {
  int n_orig = 0;
  int n_cols = 0;
  int n_eq = 0;
  int n_ineq = 0;
  Matrix a;
  VectorXd b;
  std::vector<VarMap> vars;
  std::vector<double> row_sign;

  VectorXd cost(const VectorXd& c, double* offset) const {
    VectorXd out = VectorXd::Zero(n_cols);
    double off = 0.0;
    for (int j = 0; j < n_orig; ++j) {
      const VarMap& v = vars[j];
      off += c[j] * v.shift;
      out[v.col] += c[j] * v.sign;
      if (v.neg_col >= 0) out[v.neg_col] -= c[j];
    }
    if (offset) *offset = off;
    return out;
  }

  VectorXd recover(const VectorXd& xs) const {
    VectorXd x(n_orig);
    for (int j = 0; j < n_orig; ++j) {
      const VarMap& v = vars[j];
      x[j] = v.shift + v.sign * xs[v.col] - (v.neg_col >= 0 ? xs[v.neg_col] : 0.0);
    }
    return x;
  }
};

StandardForm to_standard_form(const LinearProgram& lp) {
  StandardForm sf;
  const int n = lp.n_vars();
  const VectorXd lo = detail::lower_or_default(lp);
  const VectorXd hi = detail::upper_or_default(lp);
  sf.n_orig = n;
  sf.vars.resize(n);

  std::vector<int> bounded;  // variables needing an explicit upper-bound row
  int cols = 0;
  for (int j = 0; j < n; ++j) {
    VarMap& v = sf.vars[j];
    if (std::isfinite(lo[j])) {
      v.col = cols++;
      v.shift = lo[j];
      if (std::isfinite(hi[j])) bounded.push_back(j);
    } else if (std::isfinite(hi[j])) {
      v.col = cols++;
      v.shift = hi[j];
      v.sign = -1.0;
    } else {
      v.col = cols++;
      v.neg_col = cols++;
    }
  }
  const int m_eq = static_cast<int>(lp.eq_matrix.rows());
  const int m_in = static_cast<int>(lp.ineq_matrix.rows());
  const int m_bd = static_cast<int>(bounded.size());
  const int slack_start = cols;
  cols += m_in + m_bd;
  const int m = m_eq + m_in + m_bd;

  sf.n_cols = cols;
  sf.n_eq = m_eq;
  sf.n_ineq = m_in;
  sf.a = Matrix::Zero(m, cols);
  sf.b = VectorXd::Zero(m);

  auto add_row = [&](int row, const SparseMatrix& mat, int src, double rhs) {
    double r = rhs;
    for (SparseMatrix::InnerIterator it(mat, src); it; ++it) {
      const VarMap& v = sf.vars[it.col()];
      r -= it.value() * v.shift;
      sf.a(row, v.col) += it.value() * v.sign;
      if (v.neg_col >= 0) sf.a(row, v.neg_col) -= it.value();
    }
    sf.b[row] = r;
  };
  for (int i = 0; i < m_eq; ++i) add_row(i, lp.eq_matrix, i, lp.eq_rhs[i]);
  for (int i = 0; i < m_in; ++i) {
    add_row(m_eq + i, lp.ineq_matrix, i, lp.ineq_rhs[i]);
    sf.a(m_eq + i, slack_start + i) = 1.0;
  }
  for (int k = 0; k < m_bd; ++k) {
    const int j = bounded[k];
    const int row = m_eq + m_in + k;
    sf.a(row, sf.vars[j].col) = 1.0;
    sf.a(row, slack_start + m_in + k) = 1.0;
    sf.b[row] = hi[j] - lo[j];
  }
  sf.row_sign.assign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    if (sf.b[i] < 0.0) {
      sf.a.row(i) *= -1.0;
      sf.b[i] = -sf.b[i];
      sf.row_sign[i] = -1.0;
    }
  }
  return sf;
}

enum class PhaseResult { Optimal, Unbounded, IterationLimit };

// Tableau rows 0..m-1 are constraints, row m the phase-two reduced costs and
// row m+1 the phase-one reduced costs. The last column holds the right-hand
// side (and minus the objective in the cost rows).
class Tableau {
 public:
  explicit Tableau(const StandardForm& sf) : m_(static_cast<int>(sf.a.rows())), n_(sf.n_cols) {
    t_ = Matrix::Zero(m_ + 2, n_ + m_ + 1);
    t_.topLeftCorner(m_, n_) = sf.a;
    t_.block(0, n_, m_, m_).setIdentity();
    t_.col(rhs()).head(m_) = sf.b;
    b_ = sf.b;
    scale_ = 1.0 + (m_ ? sf.b.lpNorm<Eigen::Infinity>() : 0.0);
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
    in_basis_.assign(n_ + m_, 0);
    for (int i = 0; i < m_; ++i) in_basis_[n_ + i] = 1;
    // Phase one minimizes the sum of artificials.
    t_.row(m_ + 1).head(n_) = -t_.topLeftCorner(m_, n_).colwise().sum();
    t_(m_ + 1, rhs()) = -sf.b.sum();
  }

  int rows() const { return m_; }
  int structural() const { return n_; }
  int rhs() const { return n_ + m_; }
  int pivots() const { return pivots_; }

  void set_cost(const VectorXd& c) {
    // Reduced costs c_j - c_B' B^-1 a_j for every column, artificials cost 0.
    VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = basis_[i] < n_ ? c[basis_[i]] : 0.0;
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = c.transpose();
    t_.row(m_).noalias() -= cb.transpose() * t_.topRows(m_);
  }

  double scale() const { return scale_; }

  void perturb() {
    for (int i = 0; i < m_; ++i) t_(i, rhs()) += kPerturbation * scale_ * (1.0 + rng_.uniform01());
  }

  /// Exact basic values B^-1 b, with round-off negatives clipped. Returns the
  /// most negative value before clipping.
  double restore() {
    const VectorXd x = t_.block(0, n_, m_, m_) * b_;
    t_.col(rhs()).head(m_) = x.cwiseMax(0.0);
    // Phase-one costs: one on every artificial column.
    VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = basis_[i] < n_ ? 0.0 : 1.0;
    t_.row(m_ + 1).setZero();
    t_.row(m_ + 1).segment(n_, m_).setOnes();
    t_.row(m_ + 1).noalias() -= cb.transpose() * t_.topRows(m_);
    return m_ ? x.minCoeff() : 0.0;
  }

  // Artificial columns never re-enter the basis.
  PhaseResult run(int cost_row, int max_pivots) {
    int degenerate = 0;
    while (true) {
      if (pivots_ >= max_pivots) return PhaseResult::IterationLimit;
      const bool bland = degenerate >= kDegenerateRun;
      int q = -1;
      double best = -kPriceTol;
      for (int j = 0; j < n_; ++j) {
        const double d = t_(cost_row, j);
        if (d < best) {
          q = j;
          if (bland) break;
          best = d;
        }
      }
      if (q < 0) return PhaseResult::Optimal;

      int p = -1;
      double ratio = kInf;
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, q);
        if (a <= kPivotTol) continue;
        const double r = t_(i, rhs()) / a;
        if (p < 0 || r < ratio - 1e-12) {
          p = i;
          ratio = r;
        } else if (r <= ratio + 1e-12 && basis_[i] < basis_[p]) {
          p = i;
        }
      }
      if (p < 0) return PhaseResult::Unbounded;
      degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
      pivot(p, q);
    }
  }

  void pivot(int p, int q) {
    t_.row(p) /= t_(p, q);
    Eigen::VectorXd col = t_.col(q);
    col[p] = 0.0;
    const Eigen::RowVectorXd prow = t_.row(p);
    t_.noalias() -= col * prow;
    in_basis_[basis_[p]] = 0;
    in_basis_[q] = 1;
    basis_[p] = q;
    ++pivots_;
  }

  /// Pivot basic artificials out where a structural column allows it.
  void expel_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      int best = -1;
      double mag = 1e-7;
      for (int j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > mag && !is_basic(j)) {
          mag = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  bool is_basic(int j) const { return in_basis_[j] != 0; }

  double phase_one_value() const { return -t_(m_ + 1, rhs()); }
  double objective() const { return -t_(m_, rhs()); }

  VectorXd primal() const {
    VectorXd x = VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x[basis_[i]] = std::max(t_(i, rhs()), 0.0);
    }
    return x;
  }

  /// Row duals y with c - A'y >= 0 for the standard form.
  VectorXd duals() const {
    VectorXd y(m_);
    for (int i = 0; i < m_; ++i) y[i] = -t_(m_, n_ + i);
    return y;
  }

 private:
  int m_;
  int n_;
  Matrix t_;
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  int pivots_ = 0;
  VectorXd b_;
  double scale_ = 1.0;
  Rng rng_{0x9d2c5680};
};

int simplex_max_pivots(const SolverOptions& options) { return options.max_iter < 0 ? 100000 : options.max_iter; }

}  // namespace

namespace detail {

SolveReport solve_lp_simplex(const LinearProgram& lp, const SolverOptions& options) {
  QuadraticProgram qp;
  qp.lp = lp;
  check_dimensions(qp);
  SolveReport report;
  const int n = lp.n_vars();
  const VectorXd lo = lower_or_default(lp);
  const VectorXd hi = upper_or_default(lp);
  for (int j = 0; j < n; ++j) {
    if (lo[j] > hi[j]) {
      report.status = SolveStatus::Infeasible;
      report.message = "lower bound above upper bound";
      report.x = VectorXd::Zero(n);
      return report;
    }
  }

  const StandardForm sf = to_standard_form(lp);
  Tableau tab(sf);
  const int max_pivots = simplex_max_pivots(options);

  double offset = 0.0;
  const VectorXd cost = sf.cost(lp.objective, &offset);
  tab.set_cost(cost);

  tab.perturb();
  const PhaseResult p1 = tab.run(tab.rows() + 1, max_pivots);
  tab.restore();
  report.iterations = tab.pivots();
  if (p1 == PhaseResult::IterationLimit) {
    report.status = SolveStatus::MaxIter;
    report.message = "pivot limit reached in phase one";
    report.x = sf.recover(tab.primal());
    return report;
  }
  if (tab.phase_one_value() > 1e-7 * tab.scale()) {
    report.status = SolveStatus::Infeasible;
    report.message = "phase one ended with positive artificial mass";
    report.x = sf.recover(tab.primal());
    return report;
  }
  tab.expel_artificials();
  tab.set_cost(cost);
  tab.perturb();
  PhaseResult p2 = tab.run(tab.rows(), max_pivots);
  if (tab.restore() < -1e-7 * tab.scale() && p2 == PhaseResult::Optimal) {
    // The perturbed optimum is not primal feasible for the exact data; finish
    // from the restored vertex.
    tab.set_cost(cost);
    p2 = tab.run(tab.rows(), max_pivots);
  }
  tab.set_cost(cost);
  report.iterations = tab.pivots();
  report.x = sf.recover(tab.primal());
  report.objective_value = lp.objective.dot(report.x);
  if (p2 == PhaseResult::Unbounded) {
    report.status = SolveStatus::Unbounded;
    report.message = "ray found in phase two";
    return report;
  }
  if (p2 == PhaseResult::IterationLimit) {
    report.status = SolveStatus::MaxIter;
    report.message = "pivot limit reached in phase two";
    return report;
  }

  const VectorXd ys = tab.duals();
  const int m_eq = sf.n_eq;
  const int m_in = sf.n_ineq;
  report.eq_duals.resize(m_eq);
  report.ineq_duals.resize(m_in);
  for (int i = 0; i < m_eq; ++i) report.eq_duals[i] = sf.row_sign[i] * ys[i];
  for (int i = 0; i < m_in; ++i) report.ineq_duals[i] = std::max(-sf.row_sign[m_eq + i] * ys[m_eq + i], 0.0);
  fill_bound_duals(qp, report);
  compute_residuals(qp, report);
  report.status = SolveStatus::Optimal;
  report.trace.push_back(report.objective_value);
  return report;
}

}  // namespace detail

struct VertexOracle::Impl {
  explicit Impl(const LinearProgram& lp) : sf(to_standard_form(lp)), tab(sf) {}

  StandardForm sf;
  Tableau tab;
  bool feasible = false;
  VectorXd first;
};

VertexOracle::VertexOracle(const LinearProgram& polytope) {
  QuadraticProgram qp;
  qp.lp = polytope;
  qp.lp.objective = VectorXd::Zero(polytope.n_vars());
  detail::check_dimensions(qp);
  impl_ = std::make_unique<Impl>(qp.lp);
  impl_->tab.set_cost(VectorXd::Zero(impl_->sf.n_cols));
  impl_->tab.perturb();
  const PhaseResult p1 = impl_->tab.run(impl_->tab.rows() + 1, 100000);
  impl_->tab.restore();
  impl_->feasible = p1 == PhaseResult::Optimal && impl_->tab.phase_one_value() <= 1e-7 * impl_->tab.scale();
  if (impl_->feasible) {
    impl_->tab.expel_artificials();
    impl_->first = impl_->sf.recover(impl_->tab.primal());
  }
}

VertexOracle::~VertexOracle() = default;
VertexOracle::VertexOracle(VertexOracle&&) noexcept = default;
VertexOracle& VertexOracle::operator=(VertexOracle&&) noexcept = default;

bool VertexOracle::feasible() const { return impl_->feasible; }

Eigen::VectorXd VertexOracle::initial_vertex() const {
  if (!impl_->feasible) throw SolverError("VertexOracle: polytope is empty");
  return impl_->first;
}

Eigen::VectorXd VertexOracle::minimize(const Eigen::VectorXd& c) {
  if (!impl_->feasible) throw SolverError("VertexOracle: polytope is empty");
  if (c.size() != impl_->sf.n_orig) throw ShapeError("VertexOracle: objective size mismatch");
  const VectorXd cost = impl_->sf.cost(c, nullptr);
  impl_->tab.set_cost(cost);
  impl_->tab.perturb();
  PhaseResult r = impl_->tab.run(impl_->tab.rows(), impl_->tab.pivots() + 100000);
  if (impl_->tab.restore() < -1e-7 * impl_->tab.scale() && r == PhaseResult::Optimal) {
    impl_->tab.set_cost(cost);
    r = impl_->tab.run(impl_->tab.rows(), impl_->tab.pivots() + 100000);
  }
  if (r == PhaseResult::Unbounded) throw SolverError("VertexOracle: objective unbounded below");
  if (r == PhaseResult::IterationLimit) throw SolverError("VertexOracle: pivot limit reached");
  return impl_->sf.recover(impl_->tab.primal());
}

int VertexOracle::total_pivots() const { return impl_->tab.pivots(); }

}  // namespace explore
