#pragma once
// Local goals, goal/transform error vectors, local propagation terms and the
// cross-class discrimination penalty.

#include <span>
#include <vector>

#include "lpnet/core.hpp"

namespace lpnet {

struct ErrorPair {
  Matrix goal_error;       // U_l - G_l
  Matrix transform_error;  // Y_l - Q_l
};

ErrorPair compute_errors(const Eigen::Ref<const Matrix>& u, const Eigen::Ref<const Matrix>& g,
                         const Eigen::Ref<const Matrix>& y, const Eigen::Ref<const Matrix>& q);

struct PropagationTerms {
  double r3 = 0.0;
  double backward = 0.0;  // F_b = Tr(te^T A_{l-1} ge_{l-1})
  double forward = 0.0;   // F_f = Tr(te^T B_l ge_{l+1})
};

/// R_3 = lambda_f * F_f + lambda_b * F_b. An empty backward_weight (0 columns)
/// drops the forward term, as at the last node of the chain.
PropagationTerms local_propagation(const Eigen::Ref<const Matrix>& transform_error,
                                   const Eigen::Ref<const Matrix>& forward_weight,
                                   const Eigen::Ref<const Matrix>& goal_error_prev,
                                   const Eigen::Ref<const Matrix>& backward_weight,
                                   const Eigen::Ref<const Matrix>& goal_error_next,
                                   double lambda_b, double lambda_f);

/// lambda_f * B_l ge_{l+1} + lambda_b * A_{l-1} ge_{l-1}.
Matrix diffusion_term(const Eigen::Ref<const Matrix>& forward_weight,
                      const Eigen::Ref<const Matrix>& goal_error_prev,
                      const Eigen::Ref<const Matrix>& backward_weight,
                      const Eigen::Ref<const Matrix>& goal_error_next, double lambda_b,
                      double lambda_f);

/// Sums over the columns of a reference matrix W that belong to other
/// classes, one column per class label c:
///   d_plus.col(c)  = sum_{label(i) != c} max(w_i, 0)
///   d_minus.col(c) = sum_{label(i) != c} max(-w_i, 0)
///   n_agg.col(c)   = sum_{label(i) != c} w_i .* w_i
struct DiscriminationAggregates {
  Matrix d_plus;
  Matrix d_minus;
  Matrix n_agg;

  /// Per-coordinate threshold of a column with label c whose shrink input is
  /// b: d_plus where b > 0, d_minus where b < 0, zero elsewhere, times weight.
  Vector threshold(int label, const Eigen::Ref<const Vector>& b, double weight) const;
};

/// Labels are 0-based; num_classes must exceed every label.
DiscriminationAggregates discrimination_aggregates(const Eigen::Ref<const Matrix>& w,
                                                   std::span<const int> labels, int num_classes);

/// D(W): sum over unordered pairs of columns from different classes of
/// ||w+ .* v+||_1 + ||w- .* v-||_1 + ||w .* v||_2^2.
double discrimination_penalty(const Eigen::Ref<const Matrix>& w, std::span<const int> labels);

/// Approximate minimizer of 1/2||Q - G||_F^2 + s * sum||g||_1 + d * D(G) by
/// Jacobi sweeps; every sweep solves each column exactly against the other
/// class columns of the previous sweep.
Matrix solve_goal(const Eigen::Ref<const Matrix>& q, std::span<const int> labels,
                  const DynamicGoal& spec);

/// Objective minimized by one sweep of solve_goal when the aggregates are
/// taken from `previous`. Exposed for monotonicity checks.
double goal_sweep_objective(const Eigen::Ref<const Matrix>& g, const Eigen::Ref<const Matrix>& q,
                            const Eigen::Ref<const Matrix>& previous,
                            std::span<const int> labels, const DynamicGoal& spec);

/// Resolves a goal spec to a matrix for the given linear representations.
Matrix resolve_goal(const GoalSpec& spec, const Eigen::Ref<const Matrix>& q,
                    std::span<const int> labels);

struct Entanglement {
  double model_error = 0.0;          // 1/2 ||Q_l - Y_l||_F^2
  double flow_change_strength = 0.0; // ||diffusion term||_F^2
  double goal_error = 0.0;           // 1/2 ||G_l - U_l||_F^2
};

Entanglement entanglement_diagnostics(const Eigen::Ref<const Matrix>& q,
                                      const Eigen::Ref<const Matrix>& y,
                                      const Eigen::Ref<const Matrix>& diffusion,
                                      const Eigen::Ref<const Matrix>& g,
                                      const Eigen::Ref<const Matrix>& u);

}  // namespace lpnet
