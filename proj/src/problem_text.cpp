#include "explore/io.hpp"
#include "explore/optimize.hpp"

#include <ostream>

namespace explore {

namespace {

void write_body(std::ostream& os, const LinearProgram& lp, const SparseMatrix* hessian) {
  const int n = lp.n_vars();
  os << "objective\n";
  write_matrix_text(os, lp.objective.transpose());
  if (hessian) {
    os << "hessian\n";
    write_matrix_text(os, hessian->size() ? Eigen::MatrixXd(*hessian) : Eigen::MatrixXd::Zero(n, n));
  }
  auto system = [&](const char* name, const SparseMatrix& a, const Eigen::VectorXd& b) {
    Eigen::MatrixXd m(a.rows(), n + 1);
    if (a.rows()) {
      m.leftCols(n) = Eigen::MatrixXd(a);
      m.col(n) = b;
    }
    os << name << '\n';
    write_matrix_text(os, m);
  };
  system("ineq", lp.ineq_matrix, lp.ineq_rhs);
  system("eq", lp.eq_matrix, lp.eq_rhs);
  os << "lower\n";
  write_matrix_text(os, lp.lower.size() ? Eigen::MatrixXd(lp.lower.transpose()) : Eigen::MatrixXd::Constant(1, n, -kInf));
  os << "upper\n";
  write_matrix_text(os, lp.upper.size() ? Eigen::MatrixXd(lp.upper.transpose()) : Eigen::MatrixXd::Constant(1, n, kInf));
}

}  // namespace

void write_problem_text(std::ostream& os, const LinearProgram& lp) {
  os << "lp " << lp.n_vars() << ' ' << lp.ineq_matrix.rows() << ' ' << lp.eq_matrix.rows() << '\n';
  write_body(os, lp, nullptr);
}

void write_problem_text(std::ostream& os, const QuadraticProgram& qp) {
  os << "qp " << qp.lp.n_vars() << ' ' << qp.lp.ineq_matrix.rows() << ' ' << qp.lp.eq_matrix.rows() << '\n';
  write_body(os, qp.lp, &qp.hessian);
}

}  // namespace explore
