#include "explore/objectives.hpp"

#include "explore/errors.hpp"
#include "explore/io.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace explore {

using Triplet = Eigen::Triplet<double>;

const char* to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Infinity:
      return "infinity";
    case ObjectiveKind::Frobenius:
      return "frobenius";
    case ObjectiveKind::ColumnSum:
      return "column-sum";
    case ObjectiveKind::Dual:
      return "dual";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(const std::string& name) {
  if (name == "infinity" || name == "inf") return ObjectiveKind::Infinity;
  if (name == "frobenius" || name == "fro") return ObjectiveKind::Frobenius;
  if (name == "column-sum" || name == "columnsum" || name == "column_sum") return ObjectiveKind::ColumnSum;
  if (name == "dual") return ObjectiveKind::Dual;
  throw ParameterError("unknown objective kind '" + name + "'");
}

long variable_count(ObjectiveKind kind, int n_states, int n_actions) {
  const long s = n_states;
  const long sa = s * n_actions;
  switch (kind) {
    case ObjectiveKind::ColumnSum:
      return s + sa;
    case ObjectiveKind::Dual:
      return sa;
    case ObjectiveKind::Infinity:
    case ObjectiveKind::Frobenius:
      break;
  }
  return s * s + sa;
}

namespace {

constexpr double kCapTol = 1e-12;

void validate(const TabularMdp& mdp, ObjectiveKind kind, double xi, double zeta) {
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  if (!(xi >= 0.0) || xi > 1.0 / na + kCapTol) {
    std::ostringstream os;
    os << "action floor xi = " << xi << " must lie in [0, 1/|A|] = [0, " << 1.0 / na << "]";
    throw ParameterError(os.str());
  }
  if (kind == ObjectiveKind::ColumnSum || kind == ObjectiveKind::Dual) {
    if (std::abs(zeta - 1.0) > kCapTol) {
      throw ParameterError(std::string(to_string(kind)) + " objective has no target matrix; zeta must be 1");
    }
    return;
  }
  if (!(zeta >= 1.0 / n - kCapTol) || zeta > 1.0 + kCapTol) {
    std::ostringstream os;
    os << "target cap zeta = " << zeta << " must lie in [1/|S|, 1] = [" << 1.0 / n << ", 1]";
    throw ParameterError(os.str());
  }
}

struct Range {
  double lo;
  double hi;
};

// A floor of 1/|A| pins the uniform policy.
Range policy_range(double xi, int na) {
  if (xi * na >= 1.0 - kCapTol) return {1.0 / na, 1.0 / na};
  return {xi, kInf};
}

// A cap of 1/|S| pins the uniform target; a cap of 1 is implied by the rows.
Range target_range(double zeta, int n) {
  if (zeta * n <= 1.0 + kCapTol) return {1.0 / n, 1.0 / n};
  if (zeta >= 1.0) return {0.0, kInf};
  return {0.0, zeta};
}

void add_doubly_stochastic_rows(std::vector<Triplet>& trip, int row0, int n, int offset) {
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      trip.emplace_back(row0 + s, offset + s * n + t, 1.0);
      trip.emplace_back(row0 + n + t, offset + s * n + t, 1.0);
    }
  }
}

void add_policy_rows(std::vector<Triplet>& trip, int row0, int n, int na, int offset) {
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) trip.emplace_back(row0 + s, offset + s * na + a, 1.0);
  }
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

PolicyTable policy_from(const Vector& x, int offset, int n, int na) {
  Matrix p(n, na);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) p(s, a) = std::max(x[offset + s * na + a], 0.0);
    const double sum = p.row(s).sum();
    if (sum > 0.0) {
      p.row(s) /= sum;
    } else {
      p.row(s).setConstant(1.0 / na);
    }
  }
  return PolicyTable(std::move(p));
}

Matrix target_from(const Vector& x, int n, double zeta) {
  Matrix u(n, n);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) u(s, t) = std::clamp(x[s * n + t], 0.0, std::max(zeta, 1.0 / n));
  }
  return u;
}

void require_optimal(const SolveReport& r, const char* what) {
  if (r.status == SolveStatus::Optimal) return;
  std::ostringstream os;
  os << what << ": solver finished with status " << to_string(r.status) << " after " << r.iterations
     << " iterations (primal residual " << r.primal_residual << ", dual residual " << r.dual_residual << ")";
  if (!r.message.empty()) os << ": " << r.message;
  throw SolverError(os.str());
}

// Row-major vectorization of an |S| x |S| matrix.
Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    for (Eigen::Index t = 0; t < m.cols(); ++t) v[s * m.cols() + t] = m(s, t);
  }
  return v;
}

}  // namespace

QuadraticProgram build_frobenius_qp(const TabularMdp& mdp, double xi, double zeta) {
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  const int nu = n * n;
  const int nv = nu + n * na;
  QuadraticProgram qp;

  // sum_{s,t} (U(s,t) - sum_a pi(s,a) P(t|s,a))^2 written as 1/2 x'Qx.
  std::vector<Triplet> q;
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      const int u = s * n + t;
      q.emplace_back(u, u, 2.0);
      for (int a = 0; a < na; ++a) {
        const double p = mdp.p(s, a, t);
        if (p == 0.0) continue;
        const int pi = nu + s * na + a;
        q.emplace_back(u, pi, -2.0 * p);
        q.emplace_back(pi, u, -2.0 * p);
      }
    }
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < na; ++b) {
        const double g = mdp.row(s, a).dot(mdp.row(s, b));
        if (g != 0.0) q.emplace_back(nu + s * na + a, nu + s * na + b, 2.0 * g);
      }
    }
  }
  qp.hessian = from_triplets(nv, nv, q);

  std::vector<Triplet> e;
  add_doubly_stochastic_rows(e, 0, n, 0);
  add_policy_rows(e, 2 * n, n, na, nu);
  qp.lp.objective = Vector::Zero(nv);
  qp.lp.eq_matrix = from_triplets(3 * n, nv, e);
  qp.lp.eq_rhs = Vector::Ones(3 * n);

  const Range ur = target_range(zeta, n);
  const Range pr = policy_range(xi, na);
  qp.lp.lower.resize(nv);
  qp.lp.upper.resize(nv);
  qp.lp.lower.head(nu).setConstant(ur.lo);
  qp.lp.upper.head(nu).setConstant(ur.hi);
  qp.lp.lower.tail(n * na).setConstant(pr.lo);
  qp.lp.upper.tail(n * na).setConstant(pr.hi);
  return qp;
}

LinearProgram build_infinity_lp(const TabularMdp& mdp, double xi, double zeta) {
  // The max-row-sum of |U - PiP| is linearized with D >= |U - PiP| entrywise
  // and sum_t D(s,t) <= v, which is polynomial in size.
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  const int nu = n * n;
  const int d0 = nu;
  const int p0 = 2 * nu;
  const int v = 2 * nu + n * na;
  const int nv = v + 1;
  LinearProgram lp;
  lp.objective = Vector::Zero(nv);
  lp.objective[v] = 1.0;

  std::vector<Triplet> a;
  int row = 0;
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      for (const double sign : {1.0, -1.0}) {
        a.emplace_back(row, s * n + t, sign);
        a.emplace_back(row, d0 + s * n + t, -1.0);
        for (int act = 0; act < na; ++act) {
          const double p = mdp.p(s, act, t);
          if (p != 0.0) a.emplace_back(row, p0 + s * na + act, -sign * p);
        }
        ++row;
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) a.emplace_back(row, d0 + s * n + t, 1.0);
    a.emplace_back(row, v, -1.0);
    ++row;
  }
  lp.ineq_matrix = from_triplets(row, nv, a);
  lp.ineq_rhs = Vector::Zero(row);

  std::vector<Triplet> e;
  add_doubly_stochastic_rows(e, 0, n, 0);
  add_policy_rows(e, 2 * n, n, na, p0);
  lp.eq_matrix = from_triplets(3 * n, nv, e);
  lp.eq_rhs = Vector::Ones(3 * n);

  const Range ur = target_range(zeta, n);
  const Range pr = policy_range(xi, na);
  lp.lower = Vector::Constant(nv, -kInf);
  lp.upper = Vector::Constant(nv, kInf);
  lp.lower.head(nu).setConstant(ur.lo);
  lp.upper.head(nu).setConstant(ur.hi);
  lp.lower.segment(p0, n * na).setConstant(pr.lo);
  lp.upper.segment(p0, n * na).setConstant(pr.hi);
  return lp;
}

LinearProgram build_column_sum_lp(const TabularMdp& mdp, double xi) {
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  const int t0 = n * na;
  const int nv = t0 + n;
  LinearProgram lp;
  lp.objective = Vector::Zero(nv);
  lp.objective.tail(n).setOnes();

  // t(c) >= |1 - sum_{s,a} pi(s,a) P(c|s,a)| as two rows per column c.
  std::vector<Triplet> a;
  lp.ineq_rhs.resize(2 * n);
  for (int c = 0; c < n; ++c) {
    for (int s = 0; s < n; ++s) {
      for (int act = 0; act < na; ++act) {
        const double p = mdp.p(s, act, c);
        if (p == 0.0) continue;
        a.emplace_back(2 * c, s * na + act, -p);
        a.emplace_back(2 * c + 1, s * na + act, p);
      }
    }
    a.emplace_back(2 * c, t0 + c, -1.0);
    a.emplace_back(2 * c + 1, t0 + c, -1.0);
    lp.ineq_rhs[2 * c] = -1.0;
    lp.ineq_rhs[2 * c + 1] = 1.0;
  }
  lp.ineq_matrix = from_triplets(2 * n, nv, a);

  std::vector<Triplet> e;
  add_policy_rows(e, 0, n, na, 0);
  lp.eq_matrix = from_triplets(n, nv, e);
  lp.eq_rhs = Vector::Ones(n);

  const Range pr = policy_range(xi, na);
  lp.lower = Vector::Zero(nv);
  lp.upper = Vector::Constant(nv, kInf);
  lp.lower.head(t0).setConstant(pr.lo);
  lp.upper.head(t0).setConstant(pr.hi);
  return lp;
}

LinearProgram build_occupancy_polytope(const TabularMdp& mdp, double xi, bool action_floor) {
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  const int nv = n * na;
  LinearProgram lp;
  lp.objective = Vector::Zero(nv);

  // Flow conservation sum_a w(c,a) = sum_{s,a} P(c|s,a) w(s,a), plus mass 1.
  std::vector<Triplet> e;
  for (int c = 0; c < n; ++c) {
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < na; ++a) {
        const double coeff = (s == c ? 1.0 : 0.0) - mdp.p(s, a, c);
        if (coeff != 0.0) e.emplace_back(c, s * na + a, coeff);
      }
    }
  }
  for (int k = 0; k < nv; ++k) e.emplace_back(n, k, 1.0);
  lp.eq_matrix = from_triplets(n + 1, nv, e);
  lp.eq_rhs = Vector::Zero(n + 1);
  lp.eq_rhs[n] = 1.0;

  if (action_floor && xi > 0.0) {
    std::vector<Triplet> a;
    for (int s = 0; s < n; ++s) {
      for (int act = 0; act < na; ++act) {
        const int row = s * na + act;
        for (int b = 0; b < na; ++b) a.emplace_back(row, s * na + b, xi - (b == act ? 1.0 : 0.0));
      }
    }
    lp.ineq_matrix = from_triplets(nv, nv, a);
    lp.ineq_rhs = Vector::Zero(nv);
  }
  lp.lower = Vector::Zero(nv);
  return lp;
}

namespace {

ObjectiveSolution solve_dual(const TabularMdp& mdp, const ObjectiveOptions& options) {
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  ObjectiveSolution sol;
  sol.kind = ObjectiveKind::Dual;

  VertexOracle oracle(build_occupancy_polytope(mdp, options.xi, options.dual_action_floor));
  if (!oracle.feasible()) throw SolverError("dual: stationary occupancy polytope is empty");

  // Start from the occupancy of the uniform policy when it is well defined.
  Vector x0;
  try {
    const Distribution d = stationary_distribution(induce_chain(mdp, PolicyTable::uniform(n, na)));
    x0.resize(n * na);
    for (int s = 0; s < n; ++s) x0.segment(s * na, na).setConstant(d[s] / na);
  } catch (const NonErgodicError&) {
    x0 = oracle.initial_vertex();
  }

  auto marginal = [n, na](const Vector& w) {
    Vector d(n);
    for (int s = 0; s < n; ++s) d[s] = w.segment(s * na, na).sum();
    return d;
  };

  ConcaveProblem problem;
  if (options.dual_entropy == DualEntropy::StateMarginal) {
    problem.objective = [&](const Vector& w) { return clamped_entropy(marginal(w)); };
    problem.gradient = [&](const Vector& w) {
      const Vector gd = clamped_entropy_gradient(marginal(w));
      Vector g(n * na);
      for (int s = 0; s < n; ++s) g.segment(s * na, na).setConstant(gd[s]);
      return g;
    };
  } else {
    problem.objective = [](const Vector& w) { return clamped_entropy(w); };
    problem.gradient = [](const Vector& w) { return clamped_entropy_gradient(w); };
  }
  problem.linear_maximizer = [&](const Vector& g) { return oracle.minimize(-g); };

  const SolveReport report = frank_wolfe(problem, x0, options.frank_wolfe);
  sol.solver_iterations = report.iterations;

  Vector w = report.x.cwiseMax(0.0);
  w /= w.sum();
  Matrix p(n, na);
  for (int s = 0; s < n; ++s) {
    const double mass = w.segment(s * na, na).sum();
    for (int a = 0; a < na; ++a) p(s, a) = mass > 1e-14 ? w[s * na + a] / mass : 1.0 / na;
    p.row(s) /= p.row(s).sum();
  }
  sol.policy = PolicyTable(std::move(p));
  const double h_state = entropy(marginal(w)).nats;
  sol.objective_value = options.dual_entropy == DualEntropy::StateMarginal ? h_state : entropy(w).nats;
  sol.bound_value = h_state;
  sol.occupancy = std::move(w);
  return sol;
}

}  // namespace

ObjectiveSolution solve_objective(const TabularMdp& mdp, ObjectiveKind kind, const ObjectiveOptions& options) {
  validate(mdp, kind, options.xi, options.zeta);
  const auto start = std::chrono::steady_clock::now();
  const int n = mdp.n_states();
  const int na = mdp.n_actions();
  ObjectiveSolution sol;
  sol.kind = kind;

  switch (kind) {
    case ObjectiveKind::Frobenius: {
      const SolveReport r = solve_qp(build_frobenius_qp(mdp, options.xi, options.zeta), options.solver);
      require_optimal(r, "frobenius objective");
      sol.solver_iterations = r.iterations;
      sol.policy = policy_from(r.x, n * n, n, na);
      sol.target_matrix = target_from(r.x, n, options.zeta);
      break;
    }
    case ObjectiveKind::Infinity: {
      LinearProgram lp = build_infinity_lp(mdp, options.xi, options.zeta);
      SolveReport r = solve_lp(lp, options.solver);
      require_optimal(r, "infinity objective");
      sol.solver_iterations = r.iterations;
      // The optimal face is usually wide: only the worst row is pinned. Among
      // the minimizers, take the one with the smallest total row distance.
      const int v = static_cast<int>(lp.objective.size()) - 1;
      const double v_star = r.x[v];
      lp.lower[v] = lp.upper[v] = v_star + 2e-8 * (1.0 + v_star);
      lp.objective.setZero();
      lp.objective.segment(n * n, n * n).setOnes();
      SolveReport refined = solve_lp(lp, options.solver);
      if (refined.status == SolveStatus::Optimal) {
        sol.solver_iterations += refined.iterations;
        r = std::move(refined);
      }
      sol.policy = policy_from(r.x, 2 * n * n, n, na);
      sol.target_matrix = target_from(r.x, n, options.zeta);
      break;
    }
    case ObjectiveKind::ColumnSum: {
      const SolveReport r = solve_lp(build_column_sum_lp(mdp, options.xi), options.solver);
      require_optimal(r, "column-sum objective");
      sol.solver_iterations = r.iterations;
      sol.policy = policy_from(r.x, 0, n, na);
      break;
    }
    case ObjectiveKind::Dual:
      sol = solve_dual(mdp, options);
      break;
  }

  if (kind != ObjectiveKind::Dual) {
    const Matrix chain = induce_chain(mdp, sol.policy).matrix();
    switch (kind) {
      case ObjectiveKind::Infinity:
        sol.objective_value = matrix_distance(*sol.target_matrix, chain, MatrixDistance::Infinity);
        break;
      case ObjectiveKind::Frobenius:
        sol.objective_value = matrix_distance(*sol.target_matrix, chain, MatrixDistance::Frobenius);
        break;
      default:
        sol.objective_value = matrix_distance(chain, chain, MatrixDistance::ColumnSumDeficit);
        break;
    }
    sol.bound_value = options.evaluate_bound ? entropy_lower_bound(mdp, sol.policy, kind)
                                             : std::numeric_limits<double>::quiet_NaN();
  }
  sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

ObjectiveSolution solve_objective(const TabularMdp& mdp, ObjectiveKind kind, double xi, double zeta) {
  ObjectiveOptions options;
  options.xi = xi;
  options.zeta = zeta;
  return solve_objective(mdp, kind, options);
}

double entropy_lower_bound(const TabularMdp& mdp, const PolicyTable& policy, ObjectiveKind kind) {
  const Matrix m = induce_chain(mdp, policy).matrix();
  const int n = mdp.n_states();
  const double log_n = std::log(static_cast<double>(n));
  const int nu = n * n;

  switch (kind) {
    case ObjectiveKind::ColumnSum: {
      const double deficit = matrix_distance(m, m, MatrixDistance::ColumnSumDeficit);
      return log_n - n * deficit * deficit;
    }
    case ObjectiveKind::Infinity: {
      // min v  s.t.  D >= |U - M|, sum_t D(s,t) <= v, U doubly stochastic.
      const int v = 2 * nu;
      LinearProgram lp;
      lp.objective = Vector::Zero(v + 1);
      lp.objective[v] = 1.0;
      std::vector<Triplet> a;
      lp.ineq_rhs.resize(2 * nu + n);
      int row = 0;
      for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
          a.emplace_back(row, s * n + t, 1.0);
          a.emplace_back(row, nu + s * n + t, -1.0);
          lp.ineq_rhs[row++] = m(s, t);
          a.emplace_back(row, s * n + t, -1.0);
          a.emplace_back(row, nu + s * n + t, -1.0);
          lp.ineq_rhs[row++] = -m(s, t);
        }
      }
      for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) a.emplace_back(row, nu + s * n + t, 1.0);
        a.emplace_back(row, v, -1.0);
        lp.ineq_rhs[row++] = 0.0;
      }
      lp.ineq_matrix = from_triplets(row, v + 1, a);
      std::vector<Triplet> e;
      add_doubly_stochastic_rows(e, 0, n, 0);
      lp.eq_matrix = from_triplets(2 * n, v + 1, e);
      lp.eq_rhs = Vector::Ones(2 * n);
      lp.lower = Vector::Zero(v + 1);
      const SolveReport r = solve_lp(lp);
      require_optimal(r, "infinity bound");
      const double dist = std::max(r.x[v], 0.0);
      return log_n - n * dist * dist;
    }
    case ObjectiveKind::Frobenius: {
      // Euclidean projection of M onto the doubly stochastic matrices.
      QuadraticProgram qp;
      std::vector<Triplet> q;
      for (int k = 0; k < nu; ++k) q.emplace_back(k, k, 2.0);
      qp.hessian = from_triplets(nu, nu, q);
      const Vector mv = flatten(m);
      qp.lp.objective = -2.0 * mv;
      std::vector<Triplet> e;
      add_doubly_stochastic_rows(e, 0, n, 0);
      qp.lp.eq_matrix = from_triplets(2 * n, nu, e);
      qp.lp.eq_rhs = Vector::Ones(2 * n);
      qp.lp.lower = Vector::Zero(nu);
      const SolveReport r = solve_qp(qp);
      require_optimal(r, "frobenius bound");
      const double dist_sq = std::max((r.x - mv).squaredNorm(), 0.0);
      return log_n - static_cast<double>(n) * n * dist_sq;
    }
    case ObjectiveKind::Dual:
      break;
  }
  throw ParameterError("entropy_lower_bound: no bound is defined for the dual objective");
}

void write_solution_text(std::ostream& os, const ObjectiveSolution& solution) {
  os.precision(17);
  os << "kind " << to_string(solution.kind) << '\n';
  os << "objective " << solution.objective_value << '\n';
  os << "bound " << solution.bound_value << '\n';
  os << "policy\n";
  write_matrix_text(os, solution.policy.probs());
  if (solution.target_matrix) {
    os << "target\n";
    write_matrix_text(os, *solution.target_matrix);
  }
  if (solution.occupancy) {
    os << "occupancy\n";
    const int na = solution.policy.n_actions();
    const Vector& w = *solution.occupancy;
    Matrix grid(w.size() / na, na);
    for (Eigen::Index s = 0; s < grid.rows(); ++s) grid.row(s) = w.segment(s * na, na).transpose();
    write_matrix_text(os, grid);
  }
}

}  // namespace explore
