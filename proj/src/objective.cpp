#include <cmath>

#include "lpnet/goal.hpp"
#include "lpnet/solvers.hpp"

namespace lpnet {

namespace {

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ContextError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(cols));
}

}  // namespace

void LocalProblem::validate(const Matrix& y, const Matrix& a_prev, const Matrix* b) const {
  const Eigen::Index n = columns();
  const Eigen::Index m = a_prev.rows();
  expect_shape(a_prev, m, u_prev.rows(), "A_{l-1}");
  expect_shape(g_prev, u_prev.rows(), n, "G_{l-1}");
  expect_shape(y, m, n, "Y_l");
  if (u_next.has_value() != g_next.has_value() || u_next.has_value() != a_next.has_value())
    throw ContextError("next-level state must be all present or all absent");
  if (has_next()) {
    const Eigen::Index m_next = u_next->rows();
    expect_shape(*g_next, m_next, n, "G_{l+1}");
    expect_shape(*a_next, m_next, m, "A_l");
    if (!tied) {
      if (!b) throw ContextError("untied node needs B_l");
      expect_shape(*b, m, m_next, "B_l");
    }
  }
  if (!tied && !b_prev) throw ContextError("untied node needs B_{l-1}");
  if (b_prev) expect_shape(*b_prev, u_prev.rows(), m, "B_{l-1}");
  if (discriminative) {
    if (static_cast<Eigen::Index>(labels.size()) != n)
      throw ContextError("discriminative node needs one label per column");
    if (num_classes <= 0) throw ContextError("discriminative node needs a class count");
  }
}

Matrix LocalProblem::resolve_backward(const std::optional<Matrix>& b) const {
  if (!has_next()) return {};
  if (tied) return a_next->transpose();
  if (!b) throw ContextError("untied node needs B_l");
  return *b;
}

double eval_regularizer_V(const Eigen::Ref<const Matrix>& a, double l2, double l3, double l4) {
  double v = 0.5 * l2 * a.squaredNorm();
  if (l3 == 0.0 && l4 == 0.0) return v;
  // A A^T serves both terms unless A is tall.
  const bool wide = a.rows() <= a.cols();
  Matrix aat;
  if (l3 != 0.0 || wide) {
    aat = Matrix::Zero(a.rows(), a.rows());
    aat.selfadjointView<Eigen::Lower>().rankUpdate(a);
    aat.triangularView<Eigen::StrictlyUpper>() = aat.transpose();
  }
  if (l3 != 0.0) v += 0.5 * l3 * (aat - Matrix::Identity(a.rows(), a.rows())).squaredNorm();
  if (l4 != 0.0) {
    Matrix gram;
    if (wide) {
      gram = std::move(aat);
    } else {
      gram = Matrix::Zero(a.cols(), a.cols());
      gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    }
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw SingularityError("Gram matrix of A is singular");
    const auto diag = llt.matrixLLT().diagonal();
    if ((diag.array() <= 0.0).any()) throw SingularityError("Gram matrix of A is singular");
    const double logdet = 2.0 * diag.array().log().sum();
    if (!std::isfinite(logdet)) throw SingularityError("Gram matrix of A is singular");
    v -= l4 * logdet;
  }
  return v;
}

ObjectiveBreakdown eval_objective_local(const LocalProblem& problem, const LocalVariables& vars) {
  const Matrix* b_ptr = vars.b ? &*vars.b : nullptr;
  problem.validate(vars.y, vars.a_prev, b_ptr);
  const auto& w = problem.weights;
  const Matrix& a = vars.a_prev;
  const Matrix q = a * problem.u_prev;
  const Matrix b = problem.resolve_backward(vars.b);

  ObjectiveBreakdown out;
  out.r1 = 0.5 * (problem.gamma * q - vars.y).squaredNorm();
  if (problem.has_next()) out.r1 += 0.5 * (b * *problem.u_next - vars.y).squaredNorm();

  out.r2 = eval_regularizer_V(a, w.frobenius, w.orthogonality, w.log_det);
  if (!problem.tied) {
    out.r2 += 0.5 * w.tying * (a - problem.b_prev->transpose()).squaredNorm();
    if (problem.has_next()) out.r2 += 0.5 * w.tying * (*problem.a_next - b.transpose()).squaredNorm();
  }

  const Matrix te = vars.y - q;
  const Matrix ge_prev = problem.u_prev - problem.g_prev;
  if (problem.has_next()) {
    const Matrix ge_next = *problem.u_next - *problem.g_next;
    out.r3 = local_propagation(te, a, ge_prev, b, ge_next, w.backward_prop, w.forward_prop).r3;
  } else {
    out.r3 = local_propagation(te, a, ge_prev, Matrix(), Matrix(), w.backward_prop, w.forward_prop).r3;
  }

  out.a_term = w.sparsity * vars.y.cwiseAbs().sum();
  if (problem.discriminative && w.discrimination != 0.0)
    out.u_term = w.discrimination * discrimination_penalty(vars.y, problem.labels);
  out.total = out.r1 + out.r2 + out.r3 + out.a_term + out.u_term;
  return out;
}

}  // namespace lpnet
