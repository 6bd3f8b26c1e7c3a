#pragma once

// Generators and brute-force reference solvers shared by the test binaries.

#include "explore/mdp.hpp"
#include "explore/optimize.hpp"
#include "explore/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace testing_support {

using explore::Matrix;
using explore::Rng;
using explore::Vector;

inline Matrix random_stochastic(int rows, int cols, Rng& rng, double floor = 0.0) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = floor + rng.uniform01();
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

inline Matrix permutation_matrix(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, perm[i]) = 1.0;
  return p;
}

/// Average of random permutations plus the identity and a cyclic shift, so the
/// result is irreducible and aperiodic.
inline Matrix random_doubly_stochastic(int n, Rng& rng, int n_perms = 4) {
  Matrix m = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) m(i, (i + 1) % n) += 1.0;
  for (int k = 0; k < n_perms; ++k) m += permutation_matrix(n, rng);
  return m / (n_perms + 2.0);
}

/// Sinkhorn balancing of a random positive matrix.
inline Matrix sinkhorn(int n, Rng& rng) {
  Matrix m = random_stochastic(n, n, rng, 0.05);
  for (int it = 0; it < 10000; ++it) {
    for (int r = 0; r < n; ++r) m.row(r) /= m.row(r).sum();
    const Eigen::RowVectorXd cols = m.colwise().sum();
    for (int c = 0; c < n; ++c) m.col(c) /= cols[c];
    if ((m.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14) break;
  }
  return m;
}

/// Lazy random walk on a random weighted complete graph; reversible with
/// respect to the normalized weighted degrees.
inline Matrix random_reversible_lazy(int n, Rng& rng) {
  Matrix w(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) w(i, j) = w(j, i) = 0.05 + rng.uniform01();
  }
  Matrix p(n, n);
  for (int i = 0; i < n; ++i) p.row(i) = w.row(i) / w.row(i).sum();
  return 0.5 * (Matrix::Identity(n, n) + p);
}

inline explore::TabularMdp random_tabular(int ns, int na, Rng& rng) {
  return explore::TabularMdp(ns, na, random_stochastic(ns * na, ns, rng), Vector::Constant(ns, 1.0 / ns));
}

/// Stationary distribution by a null-space solve of (P' - I) d = 0, sum d = 1.
inline Vector stationary_by_solve(const Matrix& p) {
  const int n = static_cast<int>(p.rows());
  Matrix a = p.transpose() - Matrix::Identity(n, n);
  a.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  return a.fullPivLu().solve(rhs);
}

/// Exhaustive vertex enumeration for min c'x over {A x <= b, E x = f, l <= x <= u}.
/// Returns +inf when no vertex is feasible.
inline double lp_by_vertices(const explore::LinearProgram& lp, Vector* argmin = nullptr) {
  const int n = lp.n_vars();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  const Matrix a = Matrix(lp.ineq_matrix);
  const Matrix e = Matrix(lp.eq_matrix);
  for (int i = 0; i < a.rows(); ++i) {
    rows.push_back(a.row(i));
    rhs.push_back(lp.ineq_rhs[i]);
  }
  for (int j = 0; j < n; ++j) {
    if (lp.lower.size() && std::isfinite(lp.lower[j])) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r[j] = -1.0;
      rows.push_back(r);
      rhs.push_back(-lp.lower[j]);
    }
    if (lp.upper.size() && std::isfinite(lp.upper[j])) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r[j] = 1.0;
      rows.push_back(r);
      rhs.push_back(lp.upper[j]);
    }
  }
  const int m = static_cast<int>(rows.size());
  const int k = n - static_cast<int>(e.rows());
  double best = std::numeric_limits<double>::infinity();
  if (k < 0 || k > m) return best;
  std::vector<int> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    Matrix sys(n, n);
    Vector r(n);
    for (int i = 0; i < e.rows(); ++i) {
      sys.row(i) = e.row(i);
      r[i] = lp.eq_rhs[i];
    }
    for (int i = 0; i < k; ++i) {
      sys.row(e.rows() + i) = rows[pick[i]];
      r[e.rows() + i] = rhs[pick[i]];
    }
    Eigen::FullPivLU<Matrix> lu(sys);
    if (lu.rank() == n) {
      const Vector x = lu.solve(r);
      bool ok = true;
      for (int i = 0; i < m && ok; ++i) ok = rows[i].dot(x) <= rhs[i] + 1e-9;
      if (ok && lp.eq_matrix.rows() > 0) ok = (e * x - lp.eq_rhs).cwiseAbs().maxCoeff() <= 1e-9;
      if (ok) {
        const double v = lp.objective.dot(x);
        if (v < best) {
          best = v;
          if (argmin) *argmin = x;
        }
      }
    }
    int i = k - 1;
    while (i >= 0 && pick[i] == m - k + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

/// Minimizes f over {sum x = 1, 0 <= x <= cap} by a grid scan followed by
/// pattern search along the pairwise directions e_i - e_j with a halving step.
inline double simplex_grid_min(const std::function<double(const Vector&)>& f, int n, double cap, int grid,
                               Vector* argmin = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  Vector best_x;
  std::vector<int> units(n, 0);
  std::function<void(int, int)> scan = [&](int i, int left) {
    if (i == n - 1) {
      units[i] = left;
      Vector x(n);
      for (int j = 0; j < n; ++j) x[j] = static_cast<double>(units[j]) / grid;
      if (x.maxCoeff() > cap + 1e-12) return;
      const double v = f(x);
      if (v < best) {
        best = v;
        best_x = x;
      }
      return;
    }
    for (int u = 0; u <= left; ++u) {
      units[i] = u;
      scan(i + 1, left - u);
    }
  };
  scan(0, grid);
  if (!std::isfinite(best)) return best;
  for (double step = 1.0 / grid; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const double t = std::min({step, best_x[j], cap - best_x[i]});
          if (t <= 0.0) continue;
          Vector y = best_x;
          y[i] += t;
          y[j] -= t;
          const double v = f(y);
          if (v < best - 1e-15) {
            best = v;
            best_x = y;
            improved = true;
          }
        }
      }
    }
  }
  if (argmin) *argmin = best_x;
  return best;
}

}  // namespace testing_support
