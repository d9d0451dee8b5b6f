#include "lpnet/goal.hpp"

#include <algorithm>
#include <set>

#include "lpnet/kernels.hpp"

namespace lpnet {

namespace {

void require_same_shape(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

int class_count(std::span<const int> labels) {
  int c = 0;
  for (int l : labels) {
    if (l < 0) throw ParameterError("class labels must be nonnegative");
    c = std::max(c, l + 1);
  }
  return c;
}

std::size_t distinct_classes(std::span<const int> labels) {
  return std::set<int>(labels.begin(), labels.end()).size();
}

bool has_forward_term(const Eigen::Ref<const Matrix>& backward_weight) {
  return backward_weight.size() != 0;
}

// Columns of g solved exactly against fixed aggregates.
Matrix goal_sweep(const Eigen::Ref<const Matrix>& q, std::span<const int> labels,
                  const DiscriminationAggregates* agg, const DynamicGoal& spec) {
  const Eigen::Index m = q.rows();
  Matrix g(m, q.cols());
  const Vector zero = Vector::Zero(m);
  Vector thresh(m), divisor(m);
  const auto n = static_cast<std::size_t>(m);
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const int label = labels[static_cast<std::size_t>(j)];
    if (agg) {
      thresh = agg->threshold(label, q.col(j), spec.discrimination).array() + spec.sparsity;
      divisor = (1.0 + 2.0 * spec.discrimination * agg->n_agg.col(label).array()).matrix();
    } else {
      thresh.setConstant(spec.sparsity);
      divisor.setOnes();
    }
    kernels::shrink({q.col(j).data(), n}, {zero.data(), n}, {thresh.data(), n},
                    {divisor.data(), n}, {g.col(j).data(), n});
  }
  return g;
}

}  // namespace

ErrorPair compute_errors(const Eigen::Ref<const Matrix>& u, const Eigen::Ref<const Matrix>& g,
                         const Eigen::Ref<const Matrix>& y, const Eigen::Ref<const Matrix>& q) {
  require_same_shape(u, g, "goal error");
  require_same_shape(y, q, "transform error");
  return {u - g, y - q};
}

PropagationTerms local_propagation(const Eigen::Ref<const Matrix>& transform_error,
                                   const Eigen::Ref<const Matrix>& forward_weight,
                                   const Eigen::Ref<const Matrix>& goal_error_prev,
                                   const Eigen::Ref<const Matrix>& backward_weight,
                                   const Eigen::Ref<const Matrix>& goal_error_next,
                                   double lambda_b, double lambda_f) {
  const auto& te = transform_error;
  if (forward_weight.rows() != te.rows() || forward_weight.cols() != goal_error_prev.rows() ||
      goal_error_prev.cols() != te.cols())
    throw ShapeError("backward propagation term shapes");
  PropagationTerms out;
  // Tr(te^T X) = <te, X>_F
  out.backward = (te.array() * (forward_weight * goal_error_prev).array()).sum();
  if (has_forward_term(backward_weight)) {
    if (backward_weight.rows() != te.rows() || backward_weight.cols() != goal_error_next.rows() ||
        goal_error_next.cols() != te.cols())
      throw ShapeError("forward propagation term shapes");
    out.forward = (te.array() * (backward_weight * goal_error_next).array()).sum();
  }
  out.r3 = lambda_f * out.forward + lambda_b * out.backward;
  return out;
}

Matrix diffusion_term(const Eigen::Ref<const Matrix>& forward_weight,
                      const Eigen::Ref<const Matrix>& goal_error_prev,
                      const Eigen::Ref<const Matrix>& backward_weight,
                      const Eigen::Ref<const Matrix>& goal_error_next, double lambda_b,
                      double lambda_f) {
  if (forward_weight.cols() != goal_error_prev.rows())
    throw ShapeError("diffusion term: A_{l-1} and ge_{l-1}");
  Matrix out = lambda_b * (forward_weight * goal_error_prev);
  if (has_forward_term(backward_weight)) {
    if (backward_weight.cols() != goal_error_next.rows() ||
        backward_weight.rows() != out.rows() || goal_error_next.cols() != out.cols())
      throw ShapeError("diffusion term: B_l and ge_{l+1}");
    out += lambda_f * (backward_weight * goal_error_next);
  }
  return out;
}

Vector DiscriminationAggregates::threshold(int label, const Eigen::Ref<const Vector>& b,
                                           double weight) const {
  Vector t(b.size());
  const auto plus = d_plus.col(label);
  const auto minus = d_minus.col(label);
  for (Eigen::Index i = 0; i < b.size(); ++i)
    t[i] = b[i] > 0.0 ? weight * plus[i] : (b[i] < 0.0 ? weight * minus[i] : 0.0);
  return t;
}

DiscriminationAggregates discrimination_aggregates(const Eigen::Ref<const Matrix>& w,
                                                   std::span<const int> labels, int num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != w.cols())
    throw ShapeError("one label per column required");
  if (class_count(labels) > num_classes) throw ParameterError("label exceeds class count");
  const Eigen::Index m = w.rows();
  Matrix plus = Matrix::Zero(m, num_classes);
  Matrix minus = Matrix::Zero(m, num_classes);
  Matrix sq = Matrix::Zero(m, num_classes);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const int c = labels[static_cast<std::size_t>(j)];
    plus.col(c) += w.col(j).cwiseMax(0.0);
    minus.col(c) += (-w.col(j)).cwiseMax(0.0);
    sq.col(c) += w.col(j).cwiseAbs2();
  }
  const Vector plus_total = plus.rowwise().sum();
  const Vector minus_total = minus.rowwise().sum();
  const Vector sq_total = sq.rowwise().sum();
  DiscriminationAggregates agg;
  agg.d_plus = (-plus).colwise() + plus_total;
  agg.d_minus = (-minus).colwise() + minus_total;
  agg.n_agg = (-sq).colwise() + sq_total;
  // Cancellation can leave tiny negatives; the aggregates are sums of nonnegatives.
  agg.d_plus = agg.d_plus.cwiseMax(0.0);
  agg.d_minus = agg.d_minus.cwiseMax(0.0);
  agg.n_agg = agg.n_agg.cwiseMax(0.0);
  return agg;
}

double discrimination_penalty(const Eigen::Ref<const Matrix>& w, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != w.cols())
    throw ShapeError("one label per column required");
  if (w.cols() == 0) return 0.0;
  const auto agg = discrimination_aggregates(w, labels, class_count(labels));
  double total = 0.0;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const int c = labels[static_cast<std::size_t>(j)];
    total += w.col(j).cwiseMax(0.0).dot(agg.d_plus.col(c)) +
             (-w.col(j)).cwiseMax(0.0).dot(agg.d_minus.col(c)) +
             w.col(j).cwiseAbs2().dot(agg.n_agg.col(c));
  }
  // Every unordered pair was counted from both ends.
  return 0.5 * total;
}

Matrix solve_goal(const Eigen::Ref<const Matrix>& q, std::span<const int> labels,
                  const DynamicGoal& spec) {
  if (static_cast<Eigen::Index>(labels.size()) != q.cols())
    throw ShapeError("one label per column required");
  if (!(spec.discrimination >= 0.0) || !(spec.sparsity >= 0.0))
    throw ParameterError("goal weights must be nonnegative");
  if (spec.sweeps < 1) throw ParameterError("goal sweeps must be positive");

  Matrix g = goal_sweep(q, labels, nullptr, spec);
  if (spec.discrimination == 0.0) return g;
  if (distinct_classes(labels) < 2) {
    warn("goal discrimination needs at least two classes; skipping the cross-class penalty");
    return g;
  }
  const int classes = class_count(labels);
  for (int s = 0; s < spec.sweeps; ++s) {
    const auto agg = discrimination_aggregates(g, labels, classes);
    g = goal_sweep(q, labels, &agg, spec);
  }
  return g;
}

double goal_sweep_objective(const Eigen::Ref<const Matrix>& g, const Eigen::Ref<const Matrix>& q,
                            const Eigen::Ref<const Matrix>& previous,
                            std::span<const int> labels, const DynamicGoal& spec) {
  require_same_shape(g, q, "goal objective");
  require_same_shape(g, previous, "goal objective");
  const auto agg = discrimination_aggregates(previous, labels, class_count(labels));
  double total = 0.5 * (q - g).squaredNorm() + spec.sparsity * g.cwiseAbs().sum();
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const int c = labels[static_cast<std::size_t>(j)];
    total += spec.discrimination * (g.col(j).cwiseMax(0.0).dot(agg.d_plus.col(c)) +
                                    (-g.col(j)).cwiseMax(0.0).dot(agg.d_minus.col(c)) +
                                    g.col(j).cwiseAbs2().dot(agg.n_agg.col(c)));
  }
  return total;
}

Matrix resolve_goal(const GoalSpec& spec, const Eigen::Ref<const Matrix>& q,
                    std::span<const int> labels) {
  if (const auto* fixed = std::get_if<FixedGoal>(&spec)) {
    if (fixed->goal.rows() != q.rows() || fixed->goal.cols() != q.cols())
      throw ShapeError("fixed goal shape does not match the representations");
    return fixed->goal;
  }
  if (const auto* dynamic = std::get_if<DynamicGoal>(&spec)) return solve_goal(q, labels, *dynamic);
  return Matrix::Zero(q.rows(), q.cols());
}

Entanglement entanglement_diagnostics(const Eigen::Ref<const Matrix>& q,
                                      const Eigen::Ref<const Matrix>& y,
                                      const Eigen::Ref<const Matrix>& diffusion,
                                      const Eigen::Ref<const Matrix>& g,
                                      const Eigen::Ref<const Matrix>& u) {
  require_same_shape(q, y, "model error");
  require_same_shape(g, u, "goal error");
  return {0.5 * (q - y).squaredNorm(), diffusion.squaredNorm(), 0.5 * (g - u).squaredNorm()};
}

}  // namespace lpnet
