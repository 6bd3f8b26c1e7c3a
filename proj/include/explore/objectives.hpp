#pragma once

// Exploration objectives: distance of the induced chain to the set of doubly
// stochastic matrices (three metrics) and entropy maximization over the
// stationary state-action polytope; plus the entropy lower bounds they imply.

#include "explore/mdp.hpp"
#include "explore/optimize.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace explore {

enum class ObjectiveKind { Infinity, Frobenius, ColumnSum, Dual };

const char* to_string(ObjectiveKind kind);
/// Accepts "infinity", "frobenius", "column-sum" (or "columnsum"), "dual".
ObjectiveKind parse_objective_kind(const std::string& name);

/// Which entropy the Dual objective maximizes over the stationary polytope.
enum class DualEntropy {
  StateMarginal,  ///< H(sum_a omega(., a)), the steady-state entropy
  StateAction,    ///< H(omega)
};

struct ObjectiveOptions {
  double xi = 0.0;    ///< action floor pi(a|s) >= xi
  double zeta = 1.0;  ///< entry cap on the target matrix (Infinity, Frobenius)
  SolverOptions solver;
  DualEntropy dual_entropy = DualEntropy::StateMarginal;
  /// Apply xi to Dual as omega(s,a) >= xi * sum_a' omega(s,a').
  bool dual_action_floor = false;
  FrankWolfeOptions frank_wolfe{5000, 1e-6, true};
  /// Compute bound_value (one extra LP or QP for Infinity and Frobenius).
  bool evaluate_bound = true;
};

struct ObjectiveSolution {
  ObjectiveKind kind = ObjectiveKind::Frobenius;
  PolicyTable policy;
  /// Doubly stochastic target (Infinity and Frobenius only).
  std::optional<Matrix> target_matrix;
  /// Infinity: max row L1 distance; Frobenius: Frobenius distance (not
  /// squared); ColumnSum: column-sum deficit; Dual: maximized entropy (nats).
  double objective_value = 0.0;
  /// Lower bound on the steady-state entropy in nats; for Dual, the entropy of
  /// the state marginal of the occupancy. NaN when not evaluated.
  double bound_value = 0.0;
  /// Stationary state-action occupancy, flattened s*|A| + a (Dual only).
  std::optional<Vector> occupancy;
  int solver_iterations = 0;
  double solve_seconds = 0.0;
};

ObjectiveSolution solve_objective(const TabularMdp& mdp, ObjectiveKind kind, const ObjectiveOptions& options = {});
ObjectiveSolution solve_objective(const TabularMdp& mdp, ObjectiveKind kind, double xi, double zeta);

/// log|S| - |S| v^2 with v the L-inf distance of PiP to the doubly stochastic
/// matrices (Infinity), log|S| - |S|^2 f^2 with the Frobenius distance f
/// (Frobenius), or log|S| - |S| (column-sum deficit)^2 (ColumnSum). In nats,
/// not clamped. Slowly mixing chains can land above H(d): the distance to the
/// doubly stochastic set does not see how far a small perturbation moves d.
double entropy_lower_bound(const TabularMdp& mdp, const PolicyTable& policy, ObjectiveKind kind);

/// Decision-variable count of each formulation as usually stated:
/// |S| + |S||A| for ColumnSum, |S||A| for Dual, |S|^2 + |S||A| otherwise.
long variable_count(ObjectiveKind kind, int n_states, int n_actions);

// Problem builders. Variable layouts:
//   Frobenius: [U (s*|S|+t), Pi (s*|A|+a)]
//   Infinity:  [U, D (same shape as U), Pi, v]
//   ColumnSum: [Pi, t (one per column)]
//   Dual:      [omega (s*|A|+a)]
QuadraticProgram build_frobenius_qp(const TabularMdp& mdp, double xi, double zeta);
LinearProgram build_infinity_lp(const TabularMdp& mdp, double xi, double zeta);
LinearProgram build_column_sum_lp(const TabularMdp& mdp, double xi);
/// Stationary occupancy polytope; objective left at zero.
LinearProgram build_occupancy_polytope(const TabularMdp& mdp, double xi, bool action_floor);

/// Plain-text dump: scalars, then the policy, target and occupancy matrices.
void write_solution_text(std::ostream& os, const ObjectiveSolution& solution);

}  // namespace explore
