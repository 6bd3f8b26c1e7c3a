#include "doctest.h"

#include "explore/environments.hpp"
#include "explore/errors.hpp"
#include "explore/objectives.hpp"
#include "explore/optimize.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace explore;
using namespace testing_support;

namespace {

SparseMatrix sparse(const Matrix& m) { return m.sparseView(); }

LinearProgram simplex_lp(const Vector& c) {
  const int n = static_cast<int>(c.size());
  LinearProgram lp;
  lp.objective = c;
  lp.ineq_matrix = SparseMatrix(0, n);
  lp.ineq_rhs = Vector(0);
  lp.eq_matrix = sparse(Matrix::Ones(1, n));
  lp.eq_rhs = Vector::Ones(1);
  lp.lower = Vector::Zero(n);
  lp.upper = Vector::Constant(n, kInf);
  return lp;
}

// Bounded random LP: box [0, 1], a few dense inequality rows satisfied at 0,
// and optionally sum x = k.
LinearProgram random_lp(int n, int rows, bool with_eq, Rng& rng) {
  LinearProgram lp;
  lp.objective = Vector(n);
  for (int j = 0; j < n; ++j) lp.objective[j] = 2 * rng.uniform01() - 1;
  Matrix a(rows, n);
  Vector b(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = 2 * rng.uniform01() - 0.5;
    b[i] = 0.5 + rng.uniform01();
  }
  lp.ineq_matrix = sparse(a);
  lp.ineq_rhs = b;
  if (with_eq) {
    lp.eq_matrix = sparse(Matrix::Ones(1, n));
    lp.eq_rhs = Vector::Constant(1, 0.3 * n * rng.uniform01());
  } else {
    lp.eq_matrix = SparseMatrix(0, n);
    lp.eq_rhs = Vector(0);
  }
  lp.lower = Vector::Zero(n);
  lp.upper = Vector::Ones(n);
  return lp;
}

// Largest violation of any constraint.
double violation(const LinearProgram& lp, const Vector& x) {
  double v = 0.0;
  if (lp.ineq_matrix.rows()) v = std::max(v, (lp.ineq_matrix * x - lp.ineq_rhs).maxCoeff());
  if (lp.eq_matrix.rows()) v = std::max(v, (lp.eq_matrix * x - lp.eq_rhs).cwiseAbs().maxCoeff());
  if (lp.lower.size()) v = std::max(v, (lp.lower - x).maxCoeff());
  if (lp.upper.size()) v = std::max(v, (x - lp.upper).maxCoeff());
  return v;
}

double dual_objective(const LinearProgram& lp, const SolveReport& r) {
  double v = 0.0;
  if (lp.eq_matrix.rows()) v += lp.eq_rhs.dot(r.eq_duals);
  if (lp.ineq_matrix.rows()) v -= lp.ineq_rhs.dot(r.ineq_duals);
  for (int j = 0; j < lp.n_vars(); ++j) {
    if (lp.lower.size() && std::isfinite(lp.lower[j])) v += lp.lower[j] * r.lower_duals[j];
    if (lp.upper.size() && std::isfinite(lp.upper[j])) v -= lp.upper[j] * r.upper_duals[j];
  }
  return v;
}

SolverOptions method(LpMethod m) {
  SolverOptions o;
  o.method = m;
  return o;
}

}  // namespace

TEST_CASE("lp: single bound") {
  for (LpMethod m : {LpMethod::InteriorPoint, LpMethod::Simplex}) {
    LinearProgram lp;
    lp.objective = Vector::Ones(1);
    lp.ineq_matrix = SparseMatrix(0, 1);
    lp.ineq_rhs = Vector(0);
    lp.eq_matrix = SparseMatrix(0, 1);
    lp.eq_rhs = Vector(0);
    lp.lower = Vector::Constant(1, 3.0);
    const SolveReport r = solve_lp(lp, method(m));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-7));

    // Same bound written as a row: -x <= -3.
    lp.lower = Vector();
    lp.ineq_matrix = sparse(-Matrix::Ones(1, 1));
    lp.ineq_rhs = Vector::Constant(1, -3.0);
    const SolveReport row = solve_lp(lp, method(m));
    REQUIRE(row.status == SolveStatus::Optimal);
    CHECK(row.x[0] == doctest::Approx(3.0).epsilon(1e-7));
  }
}

TEST_CASE("lp: linear objective over the simplex picks the cheapest vertex") {
  Vector c(5);
  c << 0.3, -0.2, 0.5, -0.7, 0.1;
  for (LpMethod m : {LpMethod::InteriorPoint, LpMethod::Simplex}) {
    const SolveReport r = solve_lp(simplex_lp(c), method(m));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[3] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.objective_value == doctest::Approx(-0.7).epsilon(1e-8));
  }
}

TEST_CASE("lp: random instances against vertex enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const LinearProgram lp = random_lp(5, 3, trial % 2 == 0, rng);
    const double best = lp_by_vertices(lp);
    for (LpMethod m : {LpMethod::InteriorPoint, LpMethod::Simplex}) {
      const SolveReport r = solve_lp(lp, method(m));
      if (!std::isfinite(best)) {
        CHECK(r.status == SolveStatus::Infeasible);
        continue;
      }
      REQUIRE(r.status == SolveStatus::Optimal);
      CHECK(std::abs(r.objective_value - best) <= 1e-7);
      CHECK(violation(lp, r.x) <= 1e-6);
      CHECK(std::abs(dual_objective(lp, r) - r.objective_value) <= 1e-6);
    }
  }
}

TEST_CASE("lp: infeasible and unbounded are reported in the status") {
  for (LpMethod m : {LpMethod::InteriorPoint, LpMethod::Simplex}) {
    LinearProgram lp = simplex_lp(Vector::Ones(3));
    lp.ineq_matrix = sparse(Matrix::Ones(1, 3));
    lp.ineq_rhs = Vector::Constant(1, 0.5);
    CHECK(solve_lp(lp, method(m)).status == SolveStatus::Infeasible);

    LinearProgram open;
    open.objective = -Vector::Ones(2);
    open.ineq_matrix = sparse((Matrix(1, 2) << 1, -1).finished());
    open.ineq_rhs = Vector::Ones(1);
    open.eq_matrix = SparseMatrix(0, 2);
    open.eq_rhs = Vector(0);
    open.lower = Vector::Zero(2);
    CHECK(solve_lp(open, method(m)).status == SolveStatus::Unbounded);
  }
}

TEST_CASE("simplex: cycling example terminates at the optimum") {
  LinearProgram lp;
  lp.objective = Vector(4);
  lp.objective << -0.75, 20, -0.5, 6;
  Matrix a(3, 4);
  a << 0.25, -8, -1, 9, 0.5, -12, -0.5, 3, 0, 0, 1, 0;
  lp.ineq_matrix = sparse(a);
  lp.ineq_rhs = Vector(3);
  lp.ineq_rhs << 0, 0, 1;
  lp.eq_matrix = SparseMatrix(0, 4);
  lp.eq_rhs = Vector(0);
  lp.lower = Vector::Zero(4);
  for (LpMethod m : {LpMethod::Simplex, LpMethod::InteriorPoint}) {
    const SolveReport r = solve_lp(lp, method(m));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective_value == doctest::Approx(-1.25).epsilon(1e-8));
  }
}

TEST_CASE("simplex: degenerate occupancy polytope matches the interior point") {
  const EnvSpec env = double_chain();
  const LinearProgram poly = build_occupancy_polytope(env.mdp, 0.0, false);
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    LinearProgram lp = poly;
    for (int j = 0; j < lp.n_vars(); ++j) lp.objective[j] = rng.uniform01();
    const SolveReport s = solve_lp(lp, method(LpMethod::Simplex));
    const SolveReport i = solve_lp(lp, method(LpMethod::InteriorPoint));
    REQUIRE(s.status == SolveStatus::Optimal);
    REQUIRE(i.status == SolveStatus::Optimal);
    CHECK(s.objective_value == doctest::Approx(i.objective_value).epsilon(1e-7));
    CHECK(violation(lp, s.x) <= 1e-7);
  }
}

TEST_CASE("vertex oracle re-prices over a fixed polytope") {
  Rng rng(33);
  const LinearProgram base = random_lp(5, 3, true, rng);
  VertexOracle oracle(base);
  REQUIRE(oracle.feasible());
  CHECK(violation(base, oracle.initial_vertex()) <= 1e-9);
  for (int trial = 0; trial < 10; ++trial) {
    LinearProgram lp = base;
    for (int j = 0; j < 5; ++j) lp.objective[j] = 2 * rng.uniform01() - 1;
    const Vector x = oracle.minimize(lp.objective);
    CHECK(lp.objective.dot(x) == doctest::Approx(lp_by_vertices(lp)).epsilon(1e-9));
    CHECK(violation(lp, x) <= 1e-9);
  }
  CHECK(oracle.total_pivots() > 0);

  LinearProgram empty = simplex_lp(Vector::Ones(2));
  empty.upper = Vector::Constant(2, 0.2);
  CHECK_FALSE(VertexOracle(empty).feasible());

  LinearProgram ray;
  ray.objective = Vector::Zero(2);
  ray.ineq_matrix = SparseMatrix(0, 2);
  ray.ineq_rhs = Vector(0);
  ray.eq_matrix = SparseMatrix(0, 2);
  ray.eq_rhs = Vector(0);
  ray.lower = Vector::Zero(2);
  VertexOracle open(ray);
  CHECK_THROWS_AS(open.minimize(-Vector::Ones(2)), SolverError);
}

TEST_CASE("qp: projection onto the simplex of an interior point is the identity") {
  Vector y(4);
  y << 0.1, 0.2, 0.3, 0.4;
  QuadraticProgram qp;
  qp.hessian = sparse(2.0 * Matrix::Identity(4, 4));
  qp.lp = simplex_lp(-2.0 * y);
  const SolveReport r = solve_qp(qp);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK((r.x - y).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("qp: least norm point on the sum hyperplane is uniform") {
  QuadraticProgram qp;
  qp.hessian = sparse(Matrix::Identity(6, 6));
  qp.lp = simplex_lp(Vector::Zero(6));
  qp.lp.lower = Vector();
  qp.lp.upper = Vector();
  const SolveReport r = solve_qp(qp);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK((r.x.array() - 1.0 / 6).abs().maxCoeff() < 1e-8);
}

TEST_CASE("qp: random instances against a grid search") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 6;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = 2 * rng.uniform01() - 1;
    }
    const Matrix q = m.transpose() * m + 0.1 * Matrix::Identity(n, n);
    Vector c(n);
    for (int j = 0; j < n; ++j) c[j] = 2 * rng.uniform01() - 1;
    const double cap = 0.35;
    QuadraticProgram qp;
    qp.hessian = sparse(q);
    qp.lp = simplex_lp(c);
    qp.lp.upper = Vector::Constant(n, cap);
    const SolveReport r = solve_qp(qp);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(violation(qp.lp, r.x) <= 1e-6);
    const auto f = [&](const Vector& x) { return 0.5 * x.dot(q * x) + c.dot(x); };
    const double best = simplex_grid_min(f, n, cap, 12);
    CHECK(std::abs(r.objective_value - best) <= 1e-4);
    CHECK(r.objective_value <= best + 1e-7);
  }
}

TEST_CASE("qp: residuals of a reported optimum are small") {
  Rng rng(4);
  const LinearProgram lp = random_lp(5, 3, true, rng);
  QuadraticProgram qp;
  qp.hessian = sparse(Matrix::Identity(5, 5));
  qp.lp = lp;
  SolveReport r = solve_qp(qp);
  REQUIRE(r.status == SolveStatus::Optimal);
  compute_residuals(qp, r);
  CHECK(r.primal_residual <= 1e-6);
  CHECK(r.dual_residual <= 1e-6);
  CHECK(r.complementarity <= 1e-6);
}

TEST_CASE("frank-wolfe: entropy over the simplex converges to uniform") {
  const int n = 5;
  ConcaveProblem p;
  p.objective = clamped_entropy;
  p.gradient = clamped_entropy_gradient;
  p.linear_maximizer = [](const Vector& g) {
    Vector s = Vector::Zero(g.size());
    Eigen::Index k = 0;
    g.maxCoeff(&k);
    s[k] = 1.0;
    return s;
  };
  Vector x0 = Vector::Zero(n);
  x0[0] = 1.0;
  FrankWolfeOptions o;
  o.tol = 1e-8;
  const SolveReport r = frank_wolfe(p, x0, o);
  CHECK(r.iterations <= 5000);
  CHECK(r.objective_value >= std::log(static_cast<double>(n)) - 1e-4);
  // The 2/(k+2) schedule from a vertex closes the iterate gap at about 0.8/k.
  CHECK((r.x.array() - 1.0 / n).abs().maxCoeff() < 2e-4);
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] >= r.trace[k - 1] - 1e-12);
}

TEST_CASE("frank-wolfe: step schedule") {
  Vector y(3);
  y << 0.2, 0.5, 0.3;
  ConcaveProblem p;
  p.objective = [&](const Vector& x) { return -(x - y).squaredNorm(); };
  p.gradient = [&](const Vector& x) { return Vector(-2.0 * (x - y)); };
  std::vector<Vector> picked;
  p.linear_maximizer = [&](const Vector& g) {
    Vector s = Vector::Zero(3);
    Eigen::Index k = 0;
    g.maxCoeff(&k);
    s[k] = 1.0;
    picked.push_back(s);
    return s;
  };
  Vector x0 = Vector::Zero(3);
  x0[0] = 1.0;
  FrankWolfeOptions o;
  o.max_iter = 2;
  o.tol = 0.0;
  o.monotone = false;
  const SolveReport r = frank_wolfe(p, x0, o);
  REQUIRE(picked.size() >= 2);
  const Vector x1 = x0 + 1.0 * (picked[0] - x0);
  const Vector x2 = x1 + 2.0 / 3.0 * (picked[1] - x1);
  CHECK((r.x - x2).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.status == SolveStatus::MaxIter);
}

TEST_CASE("frank-wolfe: entropy with a linear tilt over a capped simplex against grid search") {
  Rng rng(6);
  const int n = 4;
  const double cap = 0.4;
  for (int trial = 0; trial < 4; ++trial) {
    Vector w(n);
    for (int j = 0; j < n; ++j) w[j] = 2 * rng.uniform01();
    LinearProgram poly = simplex_lp(Vector::Zero(n));
    poly.upper = Vector::Constant(n, cap);
    auto oracle = std::make_shared<VertexOracle>(poly);
    ConcaveProblem p;
    p.objective = [&](const Vector& x) { return clamped_entropy(x) + w.dot(x); };
    p.gradient = [&](const Vector& x) { return Vector(clamped_entropy_gradient(x) + w); };
    p.linear_maximizer = [oracle](const Vector& g) { return oracle->minimize(-g); };
    const SolveReport r = frank_wolfe(p, oracle->initial_vertex());
    const double best = -simplex_grid_min([&](const Vector& x) { return -p.objective(x); }, n, cap, 20);
    CHECK(std::abs(r.objective_value - best) <= 1e-3);
    CHECK(violation(poly, r.x) <= 1e-9);
  }
}

TEST_CASE("clamped entropy gradient") {
  Vector x(3);
  x << 0.5, 0.5, 0.0;
  const Vector g = clamped_entropy_gradient(x);
  CHECK(g[0] == doctest::Approx(-(std::log(0.5) + 1)));
  CHECK(g[2] == doctest::Approx(-(std::log(1e-12) + 1)));
  CHECK(clamped_entropy(x) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("problem text dump") {
  LinearProgram lp;
  lp.objective = Vector::Ones(2);
  Matrix a(1, 2);
  a << 1, 2;
  lp.ineq_matrix = a.sparseView();
  lp.ineq_rhs = Vector::Constant(1, 4.0);
  lp.lower = Vector::Zero(2);
  std::ostringstream os;
  write_problem_text(os, lp);
  const std::string text = os.str();
  CHECK(text.rfind("lp 2 1 0\nobjective\n1 2\n1 1\nineq\n1 3\n1 2 4\neq\n0 3\nlower\n1 2\n0 0\nupper\n1 2\ninf inf\n", 0) == 0);

  QuadraticProgram qp;
  qp.lp = lp;
  std::ostringstream qs;
  write_problem_text(qs, qp);
  CHECK(qs.str().rfind("qp 2 1 0\n", 0) == 0);
  CHECK(qs.str().find("hessian\n2 2\n0 0\n0 0\n") != std::string::npos);
}
