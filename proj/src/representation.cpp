#include <set>

#include "lpnet/goal.hpp"
#include "lpnet/kernels.hpp"
#include "lpnet/solvers.hpp"

namespace lpnet {

namespace {

std::span<const double> cview(const double* p, Eigen::Index n) {
  return {p, static_cast<std::size_t>(n)};
}

}  // namespace

Vector estimate_representation(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& t,
                               const Eigen::Ref<const Vector>& nu,
                               const Eigen::Ref<const Vector>& n, double l1) {
  const Eigen::Index m = x.size();
  if (t.size() != m || nu.size() != m || n.size() != m)
    throw ShapeError("representation step operand lengths differ");
  if (!(l1 >= 0.0)) throw ParameterError("sparsity weight must be nonnegative");
  if ((t.array() < 0.0).any()) throw ParameterError("thresholds must be nonnegative");
  const Vector thresh = t.array() + l1;
  const Vector divisor = 1.0 + 2.0 * n.array();
  if (!(divisor.array() > 0.0).all()) throw ParameterError("representation divisor 1 + 2n must be positive");
  Vector y(m);
  kernels::shrink(cview(x.data(), m), cview(nu.data(), m), cview(thresh.data(), m),
                  cview(divisor.data(), m), {y.data(), static_cast<std::size_t>(m)});
  return y;
}

RepresentationInputs representation_inputs(const LocalProblem& problem, const Matrix& a_prev,
                                           const std::optional<Matrix>& b) {
  const auto& w = problem.weights;
  RepresentationInputs in;
  in.x = problem.gamma * (a_prev * problem.u_prev);
  in.nu = w.backward_prop * (a_prev * (problem.u_prev - problem.g_prev));
  if (problem.has_next()) {
    const Matrix bl = problem.resolve_backward(b);
    in.x += bl * *problem.u_next;
    in.nu += w.forward_prop * (bl * (*problem.u_next - *problem.g_next));
    in.base_n = 0.5;
  }
  return in;
}

Matrix estimate_representations(const LocalProblem& problem, const LocalVariables& vars) {
  const Matrix* b_ptr = vars.b ? &*vars.b : nullptr;
  problem.validate(vars.y, vars.a_prev, b_ptr);
  const auto& w = problem.weights;
  const auto in = representation_inputs(problem, vars.a_prev, vars.b);
  const Eigen::Index m = in.x.rows();
  const Eigen::Index cols = in.x.cols();

  Matrix y(m, cols);
  const bool discriminate = problem.discriminative && w.discrimination != 0.0;
  if (!discriminate) {
    const Vector zero = Vector::Zero(m);
    const Vector base = Vector::Constant(m, in.base_n);
    for (Eigen::Index j = 0; j < cols; ++j)
      y.col(j) = estimate_representation(in.x.col(j), zero, in.nu.col(j), base, w.sparsity);
    return y;
  }

  // Columns of one class never meet inside D, so each class block has an exact
  // closed-form update given the current columns of every other class.
  y = vars.y;
  const std::set<int> classes(problem.labels.begin(), problem.labels.end());
  for (int c : classes) {
    const auto agg = discrimination_aggregates(y, problem.labels, problem.num_classes);
    const Vector n = in.base_n + w.discrimination * agg.n_agg.col(c).array();
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (problem.labels[static_cast<std::size_t>(j)] != c) continue;
      const Vector b = in.x.col(j) - in.nu.col(j);
      const Vector t = agg.threshold(c, b, w.discrimination);
      y.col(j) = estimate_representation(in.x.col(j), t, in.nu.col(j), n, w.sparsity);
    }
  }
  return y;
}

}  // namespace lpnet
