// Primal-dual interior point (Mehrotra predictor-corrector) for LPs and
// convex QPs with dense block factorizations.
//
// Presolve removes fixed variables and linearly dependent equality rows.
// Variables are then grouped into blocks: two variables share a block when
// they are coupled by Q or by a (small) inequality row. Inequality rows that
// would glue blocks past a size cap are turned into equalities with explicit
// slacks. The Newton system
//     H dx - E'dy = g,   E dx = h
// with block-diagonal H is solved through the Schur complement E H^-1 E',
// assembled block by block from the equality rows each block touches.

#include "explore/errors.hpp"
#include "explore/optimize.hpp"
#include "solver_detail.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#ifndef NDEBUG
#include <Eigen/Eigenvalues>
#endif

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace explore {

using Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double>;

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::MaxIter:
      return "max_iter";
  }
  return "unknown";
}

namespace {

VectorXd times(const SparseMatrix& m, const VectorXd& x) {
  if (m.rows() == 0) return VectorXd();
  return m * x;
}

VectorXd times_t(const SparseMatrix& m, const VectorXd& y, int n) {
  if (m.rows() == 0 || y.size() == 0) return VectorXd::Zero(n);
  return m.transpose() * y;
}

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

VectorXd or_zeros(const VectorXd& v, Eigen::Index n) { return v.size() ? v : VectorXd::Zero(n); }

}  // namespace

namespace detail {

VectorXd lower_or_default(const LinearProgram& lp) {
  return lp.lower.size() ? lp.lower : VectorXd::Constant(lp.n_vars(), -kInf);
}

VectorXd upper_or_default(const LinearProgram& lp) {
  return lp.upper.size() ? lp.upper : VectorXd::Constant(lp.n_vars(), kInf);
}

void check_dimensions(const QuadraticProgram& qp) {
  const LinearProgram& lp = qp.lp;
  const Eigen::Index n = lp.objective.size();
  auto fail = [](const std::string& what) { throw ShapeError("optimization problem: " + what); };
  if (qp.hessian.rows() != 0 && (qp.hessian.rows() != n || qp.hessian.cols() != n)) fail("hessian must be n x n");
  if (lp.ineq_matrix.rows() != lp.ineq_rhs.size()) fail("inequality rows and rhs differ in length");
  if (lp.ineq_matrix.rows() != 0 && lp.ineq_matrix.cols() != n) fail("inequality matrix has wrong column count");
  if (lp.eq_matrix.rows() != lp.eq_rhs.size()) fail("equality rows and rhs differ in length");
  if (lp.eq_matrix.rows() != 0 && lp.eq_matrix.cols() != n) fail("equality matrix has wrong column count");
  if (lp.lower.size() != 0 && lp.lower.size() != n) fail("lower bound length");
  if (lp.upper.size() != 0 && lp.upper.size() != n) fail("upper bound length");
}

void fill_bound_duals(const QuadraticProgram& qp, SolveReport& report) {
  const LinearProgram& lp = qp.lp;
  const int n = lp.n_vars();
  const VectorXd lo = lower_or_default(lp);
  const VectorXd hi = upper_or_default(lp);
  VectorXd r = lp.objective;
  if (qp.hessian.rows()) r += qp.hessian * report.x;
  r -= times_t(lp.eq_matrix, or_zeros(report.eq_duals, lp.eq_matrix.rows()), n);
  r += times_t(lp.ineq_matrix, or_zeros(report.ineq_duals, lp.ineq_matrix.rows()), n);
  report.lower_duals = VectorXd::Zero(n);
  report.upper_duals = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lo[j]) && r[j] > 0.0) report.lower_duals[j] = r[j];
    if (std::isfinite(hi[j]) && r[j] < 0.0) report.upper_duals[j] = -r[j];
  }
}

}  // namespace detail

void compute_residuals(const QuadraticProgram& qp, SolveReport& report) {
  const LinearProgram& lp = qp.lp;
  const int n = lp.n_vars();
  const VectorXd& x = report.x;
  const VectorXd lo = detail::lower_or_default(lp);
  const VectorXd hi = detail::upper_or_default(lp);
  const VectorXd y = or_zeros(report.eq_duals, lp.eq_matrix.rows());
  const VectorXd lam = or_zeros(report.ineq_duals, lp.ineq_matrix.rows());
  const VectorXd zl = or_zeros(report.lower_duals, n);
  const VectorXd zu = or_zeros(report.upper_duals, n);

  double primal = 0.0;
  double comp = 0.0;
  if (lp.eq_matrix.rows()) primal = std::max(primal, inf_norm(times(lp.eq_matrix, x) - lp.eq_rhs));
  if (lp.ineq_matrix.rows()) {
    const VectorXd slack = lp.ineq_rhs - times(lp.ineq_matrix, x);
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      primal = std::max(primal, -slack[i]);
      comp = std::max(comp, std::abs(lam[i] * slack[i]));
    }
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lo[j])) {
      primal = std::max(primal, lo[j] - x[j]);
      comp = std::max(comp, std::abs(zl[j] * (x[j] - lo[j])));
    }
    if (std::isfinite(hi[j])) {
      primal = std::max(primal, x[j] - hi[j]);
      comp = std::max(comp, std::abs(zu[j] * (hi[j] - x[j])));
    }
  }
  VectorXd r = lp.objective - times_t(lp.eq_matrix, y, n) + times_t(lp.ineq_matrix, lam, n) - zl + zu;
  if (qp.hessian.rows()) r += qp.hessian * x;
  report.primal_residual = primal;
  report.dual_residual = inf_norm(r);
  report.complementarity = comp;
}

namespace {

struct UnionFind {
  explicit UnionFind(int n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0); }

  int find(int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }

  std::vector<int> parent;
  std::vector<int> size;
};

// Problem after presolve, in the form the interior-point loop works on.
struct Core {
  int n = 0;
  SparseMatrix q;  // empty when linear
  VectorXd c;
  SparseMatrix e;  // equalities, including converted inequalities
  VectorXd f;
  SparseMatrix a;  // inequalities, each inside one block
  VectorXd b;
  VectorXd l;
  VectorXd u;
};

struct LocalRow {
  std::vector<int> idx;
  std::vector<double> val;
};

struct Block {
  std::vector<int> vars;
  std::vector<int> eq_rows;
  Matrix e;  // eq_rows x vars
  Matrix q;
  std::vector<int> ineq_rows;
  std::vector<LocalRow> ineq_local;
  Eigen::LLT<Matrix> llt;
  Matrix h_inv_et;  // H^-1 e'
};

// Mapping from the core problem back to the caller's problem.
struct Presolved {
  Core core;
  bool infeasible = false;
  std::string message;
  std::vector<int> keep;            // core variable -> original variable
  VectorXd fixed_value;             // original size; NaN for kept variables
  std::vector<int> eq_rows;         // core equality row -> original row (first block of rows)
  std::vector<int> folded_rows;     // core inequality row -> original row
  std::vector<int> deferred_rows;   // converted rows -> original row, in order
  int n_eq_independent = 0;
  std::vector<Block> blocks;
};

Presolved presolve(const QuadraticProgram& qp) {
  const LinearProgram& lp = qp.lp;
  const int n = lp.n_vars();
  const VectorXd lo = detail::lower_or_default(lp);
  const VectorXd hi = detail::upper_or_default(lp);
  Presolved out;
  out.fixed_value = VectorXd::Constant(n, std::nan(""));

  std::vector<int> core_index(n, -1);
  for (int j = 0; j < n; ++j) {
    if (lo[j] > hi[j]) {
      out.infeasible = true;
      out.message = "lower bound above upper bound";
      return out;
    }
    if (std::isfinite(lo[j]) && hi[j] - lo[j] <= 1e-12) {
      out.fixed_value[j] = lo[j];
    } else {
      core_index[j] = static_cast<int>(out.keep.size());
      out.keep.push_back(j);
    }
  }
  const int nr = static_cast<int>(out.keep.size());
  auto fixed_at = [&](int j) { return out.fixed_value[j]; };

  // Objective and Hessian restricted to kept variables.
  VectorXd c(nr);
  for (int k = 0; k < nr; ++k) c[k] = lp.objective[out.keep[k]];
  std::vector<Triplet> q_trip;
  if (qp.hessian.rows()) {
    for (int i = 0; i < n; ++i) {
      for (SparseMatrix::InnerIterator it(qp.hessian, i); it; ++it) {
        const int j = static_cast<int>(it.col());
        if (core_index[i] < 0) continue;
        if (core_index[j] >= 0) {
          q_trip.emplace_back(core_index[i], core_index[j], it.value());
        } else {
          c[core_index[i]] += it.value() * fixed_at(j);
        }
      }
    }
  }

  // Split a constraint row into kept coefficients and the constant from fixed ones.
  auto restrict_row = [&](const SparseMatrix& m, int row, std::vector<std::pair<int, double>>& coeffs) {
    coeffs.clear();
    double constant = 0.0;
    for (SparseMatrix::InnerIterator it(m, row); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (it.value() == 0.0) continue;
      if (core_index[j] >= 0) {
        coeffs.emplace_back(core_index[j], it.value());
      } else {
        constant += it.value() * fixed_at(j);
      }
    }
    return constant;
  };

  // Equalities: drop dependent rows (rank-revealing QR on E').
  const int m_eq = static_cast<int>(lp.eq_matrix.rows());
  std::vector<std::vector<std::pair<int, double>>> eq_coeffs(m_eq);
  VectorXd eq_rhs(m_eq);
  for (int i = 0; i < m_eq; ++i) eq_rhs[i] = lp.eq_rhs[i] - restrict_row(lp.eq_matrix, i, eq_coeffs[i]);
  std::vector<int> independent;
  if (m_eq > 0) {
    Matrix et = Matrix::Zero(nr, m_eq);
    for (int i = 0; i < m_eq; ++i) {
      for (auto [j, v] : eq_coeffs[i]) et(j, i) = v;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(et);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    for (int k = 0; k < rank; ++k) independent.push_back(qr.colsPermutation().indices()[k]);
    std::sort(independent.begin(), independent.end());
    std::vector<bool> used(m_eq, false);
    for (int i : independent) used[i] = true;
    for (int i = 0; i < m_eq; ++i) {
      if (!used[i] && eq_coeffs[i].empty() && std::abs(eq_rhs[i]) > 1e-9) {
        out.infeasible = true;
        out.message = "equality row with no free variables is violated";
        return out;
      }
    }
  }

  // Inequalities: drop empty rows, then decide which ones stay folded.
  const int m_in = static_cast<int>(lp.ineq_matrix.rows());
  std::vector<std::vector<std::pair<int, double>>> in_coeffs(m_in);
  VectorXd in_rhs(m_in);
  std::vector<int> live;
  for (int i = 0; i < m_in; ++i) {
    in_rhs[i] = lp.ineq_rhs[i] - restrict_row(lp.ineq_matrix, i, in_coeffs[i]);
    if (in_coeffs[i].empty()) {
      if (in_rhs[i] < -1e-9) {
        out.infeasible = true;
        out.message = "inequality row with no free variables is violated";
        return out;
      }
      continue;
    }
    live.push_back(i);
  }

  UnionFind uf(nr);
  for (const Triplet& t : q_trip) {
    if (t.value() != 0.0) uf.unite(t.row(), t.col());
  }
  int largest = 1;
  for (int k = 0; k < nr; ++k) largest = std::max(largest, uf.size[uf.find(k)]);
  // Folding an inequality into a block grows a dense factorization, so only
  // small merges are worth it; the rest go to the Schur complement.
  const int cap = std::max(8, 2 * largest);

  std::stable_sort(live.begin(), live.end(),
                   [&](int a, int b) { return in_coeffs[a].size() < in_coeffs[b].size(); });
  std::vector<int> roots;
  for (int i : live) {
    roots.clear();
    for (auto [j, v] : in_coeffs[i]) roots.push_back(uf.find(j));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    int merged = 0;
    for (int r : roots) merged += uf.size[r];
    if (roots.size() == 1 || merged <= cap) {
      for (std::size_t k = 1; k < roots.size(); ++k) uf.unite(roots[0], roots[k]);
      out.folded_rows.push_back(i);
    } else {
      out.deferred_rows.push_back(i);
    }
  }
  std::sort(out.folded_rows.begin(), out.folded_rows.end());
  std::sort(out.deferred_rows.begin(), out.deferred_rows.end());

  // Assemble the core problem; converted rows get one slack each.
  const int n_slack = static_cast<int>(out.deferred_rows.size());
  Core& core = out.core;
  core.n = nr + n_slack;
  core.c = VectorXd::Zero(core.n);
  core.c.head(nr) = c;
  core.l = VectorXd::Zero(core.n);
  core.u = VectorXd::Constant(core.n, kInf);
  for (int k = 0; k < nr; ++k) {
    core.l[k] = lo[out.keep[k]];
    core.u[k] = hi[out.keep[k]];
  }
  if (!q_trip.empty()) {
    core.q.resize(core.n, core.n);
    core.q.setFromTriplets(q_trip.begin(), q_trip.end());
  }

  out.eq_rows = independent;
  out.n_eq_independent = static_cast<int>(independent.size());
  const int m = out.n_eq_independent + n_slack;
  std::vector<Triplet> e_trip;
  core.f = VectorXd::Zero(m);
  for (int r = 0; r < out.n_eq_independent; ++r) {
    const int i = independent[r];
    for (auto [j, v] : eq_coeffs[i]) e_trip.emplace_back(r, j, v);
    core.f[r] = eq_rhs[i];
  }
  for (int k = 0; k < n_slack; ++k) {
    const int i = out.deferred_rows[k];
    const int r = out.n_eq_independent + k;
    for (auto [j, v] : in_coeffs[i]) e_trip.emplace_back(r, j, v);
    e_trip.emplace_back(r, nr + k, 1.0);
    core.f[r] = in_rhs[i];
  }
  core.e.resize(m, core.n);
  core.e.setFromTriplets(e_trip.begin(), e_trip.end());

  const int p = static_cast<int>(out.folded_rows.size());
  std::vector<Triplet> a_trip;
  core.b = VectorXd::Zero(p);
  for (int r = 0; r < p; ++r) {
    const int i = out.folded_rows[r];
    for (auto [j, v] : in_coeffs[i]) a_trip.emplace_back(r, j, v);
    core.b[r] = in_rhs[i];
  }
  core.a.resize(p, core.n);
  core.a.setFromTriplets(a_trip.begin(), a_trip.end());

  // Blocks: union-find groups plus one singleton per slack.
  std::vector<int> block_id(core.n, -1);
  std::vector<int> local(core.n, -1);
  std::vector<int> root_block(nr, -1);
  for (int k = 0; k < nr; ++k) {
    const int r = uf.find(k);
    if (root_block[r] < 0) {
      root_block[r] = static_cast<int>(out.blocks.size());
      out.blocks.emplace_back();
    }
    block_id[k] = root_block[r];
  }
  for (int k = 0; k < n_slack; ++k) {
    block_id[nr + k] = static_cast<int>(out.blocks.size());
    out.blocks.emplace_back();
  }
  for (int v = 0; v < core.n; ++v) {
    Block& blk = out.blocks[block_id[v]];
    local[v] = static_cast<int>(blk.vars.size());
    blk.vars.push_back(v);
  }

  for (int r = 0; r < m; ++r) {
    for (SparseMatrix::InnerIterator it(core.e, r); it; ++it) {
      Block& blk = out.blocks[block_id[it.col()]];
      if (blk.eq_rows.empty() || blk.eq_rows.back() != r) blk.eq_rows.push_back(r);
    }
  }
  for (Block& blk : out.blocks) {
    blk.e = Matrix::Zero(static_cast<Eigen::Index>(blk.eq_rows.size()), static_cast<Eigen::Index>(blk.vars.size()));
    blk.q = Matrix::Zero(static_cast<Eigen::Index>(blk.vars.size()), static_cast<Eigen::Index>(blk.vars.size()));
  }
  for (Block& blk : out.blocks) {
    for (std::size_t k = 0; k < blk.eq_rows.size(); ++k) {
      for (SparseMatrix::InnerIterator it(core.e, blk.eq_rows[k]); it; ++it) {
        if (&out.blocks[block_id[it.col()]] == &blk) blk.e(static_cast<Eigen::Index>(k), local[it.col()]) = it.value();
      }
    }
  }
  for (const Triplet& t : q_trip) {
    Block& blk = out.blocks[block_id[t.row()]];
    blk.q(local[t.row()], local[t.col()]) += t.value();
  }
  for (int r = 0; r < p; ++r) {
    SparseMatrix::InnerIterator first(core.a, r);
    Block& blk = out.blocks[block_id[first.col()]];
    LocalRow row;
    for (SparseMatrix::InnerIterator it(core.a, r); it; ++it) {
      row.idx.push_back(local[it.col()]);
      row.val.push_back(it.value());
    }
    blk.ineq_rows.push_back(r);
    blk.ineq_local.push_back(std::move(row));
  }
  return out;
}

double max_step(const VectorXd& v, const VectorXd& dv, const std::vector<char>& active) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (active[static_cast<std::size_t>(i)] && dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

struct Direction {
  VectorXd dx, dy, dw, dlam, dzl, dzu;
};

class InteriorPoint {
 public:
  InteriorPoint(Presolved& pre, bool quadratic, const SolverOptions& options)
      : core_(pre.core), blocks_(pre.blocks), quadratic_(quadratic), options_(options) {
    n_ = core_.n;
    m_ = static_cast<int>(core_.e.rows());
    p_ = static_cast<int>(core_.a.rows());
    has_l_.assign(n_, 0);
    has_u_.assign(n_, 0);
    for (int j = 0; j < n_; ++j) {
      has_l_[j] = std::isfinite(core_.l[j]);
      has_u_[j] = std::isfinite(core_.u[j]);
    }
    n_pairs_ = p_;
    for (int j = 0; j < n_; ++j) n_pairs_ += has_l_[j] + has_u_[j];
    scale_f_ = 1.0 + inf_norm(core_.f);
    scale_b_ = 1.0 + inf_norm(core_.b);
    scale_c_ = 1.0 + inf_norm(core_.c);
  }

  SolveStatus run(SolveReport& report) {
    initialize();
    const int max_iter = options_.max_iter < 0 ? 200 : options_.max_iter;
    for (int it = 0; it <= max_iter; ++it) {
      residuals();
      const double pobj = primal_objective();
      report.trace.push_back(pobj);
      report.iterations = it;
      const double comp = complementarity_sum();
      const double pres = std::max(inf_norm(rp_) / scale_f_, inf_norm(ri_) / scale_b_);
      const double dres = inf_norm(rd_) / scale_c_;
      if (!std::isfinite(pobj) || !std::isfinite(comp) || !std::isfinite(pres) || !std::isfinite(dres)) {
        report.message = "numerical breakdown";
        return SolveStatus::MaxIter;
      }
      if (pres <= options_.tol && dres <= options_.tol && comp <= options_.tol * (1.0 + std::abs(pobj))) {
        return SolveStatus::Optimal;
      }
      if (inf_norm(x_) > 1e10) {
        report.message = "primal iterates diverge";
        return SolveStatus::Unbounded;
      }
      if (std::max({inf_norm(y_), inf_norm(lam_), inf_norm(zl_), inf_norm(zu_)}) > 1e10) {
        report.message = "dual iterates diverge";
        return SolveStatus::Infeasible;
      }
      if (it == max_iter) break;
      if (!factor()) {
        report.message = "factorization failed";
        return SolveStatus::MaxIter;
      }
      step();
    }
    report.message = "iteration limit reached";
    return SolveStatus::MaxIter;
  }

  const VectorXd& x() const { return x_; }
  const VectorXd& y() const { return y_; }
  const VectorXd& lam() const { return lam_; }

 private:
  void initialize() {
    x_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      const double l = core_.l[j];
      const double u = core_.u[j];
      if (has_l_[j] && has_u_[j]) {
        x_[j] = l + 0.5 * (u - l);
      } else if (has_l_[j]) {
        x_[j] = l + 1.0;
      } else if (has_u_[j]) {
        x_[j] = u - 1.0;
      } else {
        x_[j] = 0.0;
      }
    }
    y_ = VectorXd::Zero(m_);
    w_ = VectorXd::Ones(p_);
    if (p_) w_ = (core_.b - core_.a * x_).cwiseMax(1.0);
    lam_ = VectorXd::Ones(p_);
    zl_ = VectorXd::Zero(n_);
    zu_ = VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) zl_[j] = 1.0;
      if (has_u_[j]) zu_[j] = 1.0;
    }
  }

  VectorXd lower_gap() const {
    VectorXd s = VectorXd::Ones(n_);
    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) s[j] = x_[j] - core_.l[j];
    }
    return s;
  }

  VectorXd upper_gap() const {
    VectorXd s = VectorXd::Ones(n_);
    for (int j = 0; j < n_; ++j) {
      if (has_u_[j]) s[j] = core_.u[j] - x_[j];
    }
    return s;
  }

  double primal_objective() const {
    double v = core_.c.dot(x_);
    if (core_.q.rows()) v += 0.5 * x_.dot(core_.q * x_);
    return v;
  }

  double complementarity_sum() const {
    const VectorXd sl = lower_gap();
    const VectorXd su = upper_gap();
    double s = w_.dot(lam_);
    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) s += sl[j] * zl_[j];
      if (has_u_[j]) s += su[j] * zu_[j];
    }
    return s;
  }

  void residuals() {
    rd_ = core_.c - times_t(core_.e, y_, n_) + times_t(core_.a, lam_, n_) - zl_ + zu_;
    if (core_.q.rows()) rd_ += core_.q * x_;
    rp_ = m_ ? VectorXd(core_.e * x_ - core_.f) : VectorXd();
    ri_ = p_ ? VectorXd(core_.a * x_ + w_ - core_.b) : VectorXd();
  }

  bool factor() {
    const VectorXd sl = lower_gap();
    const VectorXd su = upper_gap();
    schur_ = Matrix::Zero(m_, m_);
    for (Block& blk : blocks_) {
      const int nb = static_cast<int>(blk.vars.size());
      Matrix h = blk.q;
      for (int k = 0; k < nb; ++k) {
        const int j = blk.vars[k];
        double d = 1e-10;
        if (has_l_[j]) d += zl_[j] / sl[j];
        if (has_u_[j]) d += zu_[j] / su[j];
        h(k, k) += d;
      }
      for (std::size_t r = 0; r < blk.ineq_rows.size(); ++r) {
        const int gr = blk.ineq_rows[r];
        const double s = lam_[gr] / w_[gr];
        const LocalRow& row = blk.ineq_local[r];
        for (std::size_t a = 0; a < row.idx.size(); ++a) {
          for (std::size_t b = 0; b < row.idx.size(); ++b) h(row.idx[a], row.idx[b]) += s * row.val[a] * row.val[b];
        }
      }
      blk.llt.compute(h);
      double reg = 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
      for (int attempt = 0; blk.llt.info() != Eigen::Success && attempt < 8; ++attempt) {
        h.diagonal().array() += reg;
        blk.llt.compute(h);
        reg *= 100.0;
      }
      if (blk.llt.info() != Eigen::Success) return false;
      if (!blk.eq_rows.empty()) {
        blk.h_inv_et = blk.llt.solve(blk.e.transpose());
        const Matrix contrib = blk.e * blk.h_inv_et;
        for (std::size_t a = 0; a < blk.eq_rows.size(); ++a) {
          for (std::size_t b = 0; b < blk.eq_rows.size(); ++b) {
            schur_(blk.eq_rows[a], blk.eq_rows[b]) += contrib(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          }
        }
      }
    }
    if (m_ == 0) return true;
    schur_llt_.compute(schur_);
    double reg = 1e-14 * (1.0 + schur_.diagonal().maxCoeff());
    for (int attempt = 0; schur_llt_.info() != Eigen::Success && attempt < 10; ++attempt) {
      schur_.diagonal().array() += reg;
      schur_llt_.compute(schur_);
      reg *= 100.0;
    }
    return schur_llt_.info() == Eigen::Success;
  }

  // Newton direction for complementarity targets rc_l, rc_u, rc_w.
  Direction solve(const VectorXd& rc_l, const VectorXd& rc_u, const VectorXd& rc_w) const {
    const VectorXd sl = lower_gap();
    const VectorXd su = upper_gap();
    VectorXd g = -rd_;
    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) g[j] += rc_l[j] / sl[j];
      if (has_u_[j]) g[j] -= rc_u[j] / su[j];
    }
    if (p_) {
      const VectorXd t = (rc_w + lam_.cwiseProduct(ri_)).cwiseQuotient(w_);
      g -= core_.a.transpose() * t;
    }

    Direction d;
    d.dx = VectorXd::Zero(n_);
    VectorXd rhs = m_ ? VectorXd(-rp_) : VectorXd();
    std::vector<VectorXd> v(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const Block& blk = blocks_[bi];
      VectorXd gb(static_cast<Eigen::Index>(blk.vars.size()));
      for (std::size_t k = 0; k < blk.vars.size(); ++k) gb[static_cast<Eigen::Index>(k)] = g[blk.vars[k]];
      v[bi] = blk.llt.solve(gb);
      if (!blk.eq_rows.empty()) {
        const VectorXd ev = blk.e * v[bi];
        for (std::size_t a = 0; a < blk.eq_rows.size(); ++a) rhs[blk.eq_rows[a]] -= ev[static_cast<Eigen::Index>(a)];
      }
    }
    d.dy = m_ ? VectorXd(schur_llt_.solve(rhs)) : VectorXd();
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const Block& blk = blocks_[bi];
      VectorXd dxb = v[bi];
      if (!blk.eq_rows.empty()) {
        VectorXd dyb(static_cast<Eigen::Index>(blk.eq_rows.size()));
        for (std::size_t a = 0; a < blk.eq_rows.size(); ++a) dyb[static_cast<Eigen::Index>(a)] = d.dy[blk.eq_rows[a]];
        dxb += blk.h_inv_et * dyb;
      }
      for (std::size_t k = 0; k < blk.vars.size(); ++k) d.dx[blk.vars[k]] = dxb[static_cast<Eigen::Index>(k)];
    }

    d.dzl = VectorXd::Zero(n_);
    d.dzu = VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) d.dzl[j] = (rc_l[j] - zl_[j] * d.dx[j]) / sl[j];
      if (has_u_[j]) d.dzu[j] = (rc_u[j] + zu_[j] * d.dx[j]) / su[j];
    }
    if (p_) {
      d.dw = -ri_ - core_.a * d.dx;
      d.dlam = (rc_w - lam_.cwiseProduct(d.dw)).cwiseQuotient(w_);
    } else {
      d.dw = VectorXd();
      d.dlam = VectorXd();
    }
    return d;
  }

  void step_lengths(const Direction& d, double& ap, double& ad) const {
    const VectorXd sl = lower_gap();
    const VectorXd su = upper_gap();
    ap = std::min(max_step(sl, d.dx, has_l_), max_step(su, VectorXd(-d.dx), has_u_));
    ad = std::min(max_step(zl_, d.dzl, has_l_), max_step(zu_, d.dzu, has_u_));
    if (p_) {
      ap = std::min(ap, max_step(w_, d.dw));
      ad = std::min(ad, max_step(lam_, d.dlam));
    }
    if (quadratic_) ap = ad = std::min(ap, ad);
  }

  void step() {
    const VectorXd sl = lower_gap();
    const VectorXd su = upper_gap();
    VectorXd rc_l = VectorXd::Zero(n_);
    VectorXd rc_u = VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) rc_l[j] = -sl[j] * zl_[j];
      if (has_u_[j]) rc_u[j] = -su[j] * zu_[j];
    }
    VectorXd rc_w = -w_.cwiseProduct(lam_);
    const Direction aff = solve(rc_l, rc_u, rc_w);

    double sigma = 0.0;
    double mu = 0.0;
    if (n_pairs_ > 0) {
      double ap = 0.0;
      double ad = 0.0;
      step_lengths(aff, ap, ad);
      mu = complementarity_sum() / n_pairs_;
      double mu_aff = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (has_l_[j]) mu_aff += (sl[j] + ap * aff.dx[j]) * (zl_[j] + ad * aff.dzl[j]);
        if (has_u_[j]) mu_aff += (su[j] - ap * aff.dx[j]) * (zu_[j] + ad * aff.dzu[j]);
      }
      for (int i = 0; i < p_; ++i) mu_aff += (w_[i] + ap * aff.dw[i]) * (lam_[i] + ad * aff.dlam[i]);
      mu_aff /= n_pairs_;
      sigma = mu > 0.0 ? std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0) : 0.0;
    }

    for (int j = 0; j < n_; ++j) {
      if (has_l_[j]) rc_l[j] += sigma * mu - aff.dx[j] * aff.dzl[j];
      if (has_u_[j]) rc_u[j] += sigma * mu + aff.dx[j] * aff.dzu[j];
    }
    if (p_) rc_w += (VectorXd::Constant(p_, sigma * mu) - aff.dw.cwiseProduct(aff.dlam));
    const Direction d = solve(rc_l, rc_u, rc_w);

    double ap = 0.0;
    double ad = 0.0;
    step_lengths(d, ap, ad);
    const double eta = 0.995;
    ap = std::min(1.0, eta * ap);
    ad = std::min(1.0, eta * ad);
    if (quadratic_) ap = ad = std::min(ap, ad);

    x_ += ap * d.dx;
    y_ += ad * d.dy;
    zl_ += ad * d.dzl;
    zu_ += ad * d.dzu;
    if (p_) {
      w_ += ap * d.dw;
      lam_ += ad * d.dlam;
    }
  }

  Core& core_;
  std::vector<Block>& blocks_;
  bool quadratic_;
  SolverOptions options_;
  int n_ = 0;
  int m_ = 0;
  int p_ = 0;
  int n_pairs_ = 0;
  std::vector<char> has_l_;
  std::vector<char> has_u_;
  double scale_f_ = 1.0;
  double scale_b_ = 1.0;
  double scale_c_ = 1.0;

  VectorXd x_, y_, w_, lam_, zl_, zu_;
  VectorXd rd_, rp_, ri_;
  Matrix schur_;
  Eigen::LLT<Matrix> schur_llt_;
};

}  // namespace

namespace detail {

SolveReport solve_interior_point(const QuadraticProgram& qp, const SolverOptions& options) {
  check_dimensions(qp);
  const LinearProgram& lp = qp.lp;
  const int n = lp.n_vars();
  SolveReport report;
  Presolved pre = presolve(qp);
  if (pre.infeasible) {
    report.status = SolveStatus::Infeasible;
    report.message = pre.message;
    report.x = VectorXd::Zero(n);
    return report;
  }

  const bool quadratic = pre.core.q.rows() != 0;
  InteriorPoint ipm(pre, quadratic, options);
  report.status = ipm.run(report);

  report.x.resize(n);
  for (int j = 0; j < n; ++j) {
    if (!std::isnan(pre.fixed_value[j])) report.x[j] = pre.fixed_value[j];
  }
  for (std::size_t k = 0; k < pre.keep.size(); ++k) report.x[pre.keep[k]] = ipm.x()[static_cast<Eigen::Index>(k)];
  report.eq_duals = VectorXd::Zero(lp.eq_matrix.rows());
  for (int r = 0; r < pre.n_eq_independent; ++r) report.eq_duals[pre.eq_rows[r]] = ipm.y()[r];
  report.ineq_duals = VectorXd::Zero(lp.ineq_matrix.rows());
  for (std::size_t r = 0; r < pre.folded_rows.size(); ++r) {
    report.ineq_duals[pre.folded_rows[r]] = std::max(ipm.lam()[static_cast<Eigen::Index>(r)], 0.0);
  }
  for (std::size_t k = 0; k < pre.deferred_rows.size(); ++k) {
    report.ineq_duals[pre.deferred_rows[k]] =
        std::max(-ipm.y()[pre.n_eq_independent + static_cast<Eigen::Index>(k)], 0.0);
  }
  fill_bound_duals(qp, report);
  report.objective_value = lp.objective.dot(report.x);
  if (qp.hessian.rows()) report.objective_value += 0.5 * report.x.dot(qp.hessian * report.x);
  compute_residuals(qp, report);
  if (report.status == SolveStatus::Optimal && report.primal_residual > 1e-6) {
    // Dropped dependent rows are only consistent up to the rank threshold.
    report.status = SolveStatus::Infeasible;
    report.message = "equality system is inconsistent";
  }
  return report;
}

}  // namespace detail

SolveReport solve_lp(const LinearProgram& lp, const SolverOptions& options) {
  if (options.method == LpMethod::Simplex) return detail::solve_lp_simplex(lp, options);
  QuadraticProgram qp;
  qp.lp = lp;
  return detail::solve_interior_point(qp, options);
}

SolveReport solve_qp(const QuadraticProgram& qp, const SolverOptions& options) {
#ifndef NDEBUG
  if (qp.hessian.rows()) {
    const Matrix dense(qp.hessian);
    if ((dense - dense.transpose()).cwiseAbs().maxCoeff() > 1e-8) throw ParameterError("solve_qp: hessian not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(dense, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8) throw ParameterError("solve_qp: hessian not positive semidefinite");
  }
#endif
  return detail::solve_interior_point(qp, options);
}

}  // namespace explore
