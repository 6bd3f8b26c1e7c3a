#pragma once

// Dense-factorization LP/QP solvers and a Frank-Wolfe driver.
//
// Problems are stated as
//   minimize    1/2 x'Qx + c'x
//   subject to  A x <= b,  E x = f,  lower <= x <= upper.
// Constraint matrices are stored sparse to keep memory proportional to the
// nonzeros; all factorizations are dense.
//
// Dual sign convention of every SolveReport:
//   Qx + c - E'y + A'lambda - z_lower + z_upper = 0,  lambda, z >= 0.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace explore {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinearProgram {
  Eigen::VectorXd objective;
  SparseMatrix ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  SparseMatrix eq_matrix;
  Eigen::VectorXd eq_rhs;
  /// Empty bound vectors mean -inf / +inf for every variable.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int n_vars() const { return static_cast<int>(objective.size()); }
};

struct QuadraticProgram {
  /// Symmetric positive semidefinite; an empty matrix means Q = 0.
  SparseMatrix hessian;
  LinearProgram lp;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

const char* to_string(SolveStatus status);

struct SolveReport {
  Eigen::VectorXd x;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd lower_duals;
  Eigen::VectorXd upper_duals;
  /// Objective value after each iteration.
  std::vector<double> trace;
  std::string message;
};

enum class LpMethod { InteriorPoint, Simplex };

struct SolverOptions {
  double tol = 1e-8;
  /// Iteration cap; a negative value picks the method's default
  /// (200 interior-point iterations, 100000 simplex pivots).
  int max_iter = -1;
  LpMethod method = LpMethod::InteriorPoint;
};

/// Interior point by default; the simplex path returns a vertex.
SolveReport solve_lp(const LinearProgram& lp, const SolverOptions& options = {});

/// Mehrotra predictor-corrector interior point.
SolveReport solve_qp(const QuadraticProgram& qp, const SolverOptions& options = {});

/// Residuals of a candidate primal/dual pair against an LP or QP, using the
/// sign convention above. Fills primal_residual, dual_residual and
/// complementarity of `report`.
void compute_residuals(const QuadraticProgram& qp, SolveReport& report);

/// Linear minimization over a fixed polytope {A x <= b, E x = f, l <= x <= u}.
/// Phase one runs once at construction; each call re-prices from the last
/// optimal basis, so a sequence of nearby objectives is cheap.
class VertexOracle {
 public:
  explicit VertexOracle(const LinearProgram& polytope);
  ~VertexOracle();
  VertexOracle(VertexOracle&&) noexcept;
  VertexOracle& operator=(VertexOracle&&) noexcept;

  bool feasible() const;
  /// Any vertex of the polytope (the one found by phase one).
  Eigen::VectorXd initial_vertex() const;
  /// argmin_x c'x over the polytope; throws SolverError if unbounded.
  Eigen::VectorXd minimize(const Eigen::VectorXd& c);
  int total_pivots() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Debug dump: a "lp <vars> <ineq> <eq>" (or "qp ...") header, then named
/// sections written as dense matrices: objective, hessian (QP only),
/// ineq [A | b], eq [E | f], lower, upper.
void write_problem_text(std::ostream& os, const LinearProgram& lp);
void write_problem_text(std::ostream& os, const QuadraticProgram& qp);

struct ConcaveProblem {
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  /// argmax_s <g, s> over the feasible polytope.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> linear_maximizer;
};

struct FrankWolfeOptions {
  int max_iter = 5000;
  double tol = 1e-6;
  /// Skip steps that would lower the objective.
  bool monotone = true;
};

/// Maximizes a concave function with step 2/(k+2). Stops once the
/// gap <grad f(x_k), s_k - x_k> drops to `tol`. Returns status Optimal on that
/// test and MaxIter otherwise; `complementarity` holds the last gap.
SolveReport frank_wolfe(const ConcaveProblem& problem, const Eigen::VectorXd& x0,
                        const FrankWolfeOptions& options = {});

/// Entropy -sum x log x with entries clamped at 1e-12, and its gradient.
double clamped_entropy(const Eigen::VectorXd& x);
Eigen::VectorXd clamped_entropy_gradient(const Eigen::VectorXd& x);

}  // namespace explore
