#pragma once
// Local subproblem of one node level: objective evaluation and the three
// alternating block updates (representations, forward weight, backward
// weight).

#include <optional>
#include <vector>

#include "lpnet/core.hpp"

namespace lpnet {

/// Frozen neighborhood of the subset {Y_l, A_{l-1}, B_l} of node l. All
/// representation matrices share the same columns (the current batch).
struct LocalProblem {
  int level = 1;
  Matrix u_prev;                 // U_{l-1}
  Matrix g_prev;                 // G_{l-1}; zeros when level l-1 has no goal
  std::optional<Matrix> u_next;  // U_{l+1}; absent at the last node
  std::optional<Matrix> g_next;  // G_{l+1}
  std::optional<Matrix> a_next;  // A_l, read-only here; absent at the last node
  std::optional<Matrix> b_prev;  // B_{l-1}, read-only here; absent on tied networks
  bool tied = true;
  LevelWeights weights;
  double gamma = 1.0;
  bool discriminative = false;   // node carries U(Y_l) = lambda_0 D(Y_l)
  std::vector<int> labels;       // 0-based class of every column
  int num_classes = 0;

  bool has_next() const { return u_next.has_value(); }
  Eigen::Index columns() const { return u_prev.cols(); }

  /// Throws ContextError when neighbor state is missing or misshapen.
  void validate(const Matrix& y, const Matrix& a_prev, const Matrix* b) const;

  /// B_l as seen by this node: the free variable when untied, A_l^T when tied.
  Matrix resolve_backward(const std::optional<Matrix>& b) const;
};

/// Current values of the subset's variables. `b` is B_l (absent at the last
/// node or when tied; tied networks read A_l^T from the problem).
struct LocalVariables {
  Matrix y;
  Matrix a_prev;
  std::optional<Matrix> b;
};

struct ObjectiveBreakdown {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double a_term = 0.0;
  double u_term = 0.0;
  double total = 0.0;
};

ObjectiveBreakdown eval_objective_local(const LocalProblem& problem, const LocalVariables& vars);

/// (l2/2)||A||^2 + (l3/2)||A A^T - I||^2 - l4 log|det G| with G the smaller of
/// A^T A and A A^T. Throws SingularityError when G is singular and l4 > 0.
double eval_regularizer_V(const Eigen::Ref<const Matrix>& a, double l2, double l3, double l4);

/// Exact minimizer of 1/2||x-y||^2 + nu^T y + (l1 + t)^T |y| + n^T (y.*y):
/// y = sign(x-nu) .* max(|x-nu| - t - l1, 0) ./ (1 + 2n).
Vector estimate_representation(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& t,
                               const Eigen::Ref<const Vector>& nu,
                               const Eigen::Ref<const Vector>& n, double l1);

/// The assembled inputs of the representation step for a whole batch.
struct RepresentationInputs {
  Matrix x;          // gamma * A_{l-1} U_{l-1} + B_l U_{l+1}
  Matrix nu;         // lambda_b A_{l-1}(U_{l-1}-G_{l-1}) + lambda_f B_l(U_{l+1}-G_{l+1})
  double base_n = 0; // 1/2 when both reconstruction terms are present
};

RepresentationInputs representation_inputs(const LocalProblem& problem, const Matrix& a_prev,
                                           const std::optional<Matrix>& b);

/// Exact block update of Y_l. With the discrimination term, classes are
/// updated one after another against the current columns of the others.
Matrix estimate_representations(const LocalProblem& problem, const LocalVariables& vars);

struct ForwardWeightReport {
  double min_eigenvalue = 0.0;  // of sym(R_Q) before shifting
  double shift = 0.0;           // spectral shift folded into the quartic
  int fallbacks = 0;            // indices with no admissible quartic root
  bool isotropic = false;       // the unwhitened alignment was kept
};

/// Approximate closed-form minimizer of R1 + R2 + R3 over A_{l-1}.
Matrix estimate_forward_weight(const LocalProblem& problem, const Matrix& y,
                               const std::optional<Matrix>& b,
                               ForwardWeightReport* report = nullptr);

/// sym(R_Q) and R_L of the forward-weight problem; the objective in A is
/// Tr(A R_Q A^T) - Tr(A^T R_L) + V-terms beyond lambda_2 + constants.
struct ForwardWeightTerms {
  Matrix quadratic;  // symmetric, includes (lambda_2 + lambda_5)/2 I
  Matrix linear;
};

ForwardWeightTerms forward_weight_terms(const LocalProblem& problem, const Matrix& y,
                                        const std::optional<Matrix>& b);

/// Exact minimizer of R1 + R2 + R3 over B_l. Requires an untied network and a
/// next level.
Matrix estimate_backward_weight(const LocalProblem& problem, const Matrix& y,
                                const Matrix& a_prev);

/// Real roots of c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0, ascending, duplicates
/// merged. Leading zero coefficients reduce the degree.
std::vector<double> quartic_real_roots(double c4, double c3, double c2, double c1, double c0);

}  // namespace lpnet
