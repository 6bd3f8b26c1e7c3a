#include "explore/errors.hpp"
#include "explore/optimize.hpp"

#include <cmath>

namespace explore {

namespace {
constexpr double kEntropyFloor = 1e-12;
}

double clamped_entropy(const Eigen::VectorXd& x) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = std::max(x[i], kEntropyFloor);
    h -= v * std::log(v);
  }
  return h;
}

Eigen::VectorXd clamped_entropy_gradient(const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = -(std::log(std::max(x[i], kEntropyFloor)) + 1.0);
  return g;
}

SolveReport frank_wolfe(const ConcaveProblem& problem, const Eigen::VectorXd& x0, const FrankWolfeOptions& options) {
  if (!problem.objective || !problem.gradient || !problem.linear_maximizer) {
    throw ParameterError("frank_wolfe: objective, gradient and linear maximizer are required");
  }
  SolveReport report;
  Eigen::VectorXd x = x0;
  double fx = problem.objective(x);
  report.trace.push_back(fx);
  report.status = SolveStatus::MaxIter;

  for (int k = 0; k < options.max_iter; ++k) {
    const Eigen::VectorXd g = problem.gradient(x);
    const Eigen::VectorXd s = problem.linear_maximizer(g);
    if (s.size() != x.size()) throw ShapeError("frank_wolfe: oracle returned a vector of the wrong size");
    const Eigen::VectorXd dir = s - x;
    const double gap = g.dot(dir);
    report.complementarity = gap;
    report.iterations = k;
    if (gap <= options.tol) {
      report.status = SolveStatus::Optimal;
      break;
    }
    const double step = 2.0 / (k + 2.0);
    Eigen::VectorXd next = x + step * dir;
    const double fnext = problem.objective(next);
    if (!options.monotone || fnext >= fx) {
      x = std::move(next);
      fx = fnext;
    }
    report.trace.push_back(fx);
    report.iterations = k + 1;
  }
  report.x = std::move(x);
  report.objective_value = fx;
  return report;
}

}  // namespace explore
