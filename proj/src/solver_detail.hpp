#pragma once

#include "explore/optimize.hpp"

namespace explore::detail {

SolveReport solve_lp_simplex(const LinearProgram& lp, const SolverOptions& options);
SolveReport solve_interior_point(const QuadraticProgram& qp, const SolverOptions& options);

/// Lower/upper bounds with empty vectors expanded to -inf / +inf.
Eigen::VectorXd lower_or_default(const LinearProgram& lp);
Eigen::VectorXd upper_or_default(const LinearProgram& lp);

/// Throws ShapeError on inconsistent dimensions.
void check_dimensions(const QuadraticProgram& qp);

/// Bound duals from the reduced cost r = Qx + c - E'y + A'lambda.
void fill_bound_duals(const QuadraticProgram& qp, SolveReport& report);

}  // namespace explore::detail
