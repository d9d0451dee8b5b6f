#include "lpnet/solvers.hpp"

namespace lpnet {

// Stationarity of 1/2||B U - Y||^2 + (l5/2)||A_l - B^T||^2 + l_f <Y - Q, B(U - G)>
// in B, with U = U_{l+1} and G = G_{l+1}.
Matrix estimate_backward_weight(const LocalProblem& problem, const Matrix& y,
                                const Matrix& a_prev) {
  if (problem.tied) throw ContextError("tied networks have no free backward weight");
  if (!problem.has_next()) throw ContextError("the last node has no backward weight");
  const Matrix probe = Matrix::Zero(y.rows(), problem.u_next->rows());
  problem.validate(y, a_prev, &probe);
  const auto& w = problem.weights;
  const Matrix& u = *problem.u_next;

  Matrix gram = u * u.transpose();
  gram.diagonal().array() += w.tying;
  Matrix rhs = y * u.transpose() + w.tying * problem.a_next->transpose();
  if (w.forward_prop != 0.0)
    rhs += w.forward_prop * ((y - a_prev * problem.u_prev) * (*problem.g_next - u).transpose());

  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw SingularityError("U_{l+1} U_{l+1}^T + lambda_5 I is singular at level " +
                           std::to_string(problem.level));
  // B G = R with G symmetric, so B^T = G^-1 R^T.
  return ldlt.solve(rhs.transpose()).transpose();
}

}  // namespace lpnet
