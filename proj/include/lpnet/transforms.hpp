#pragma once
// Sparsifying (sNT) and generalized (gNT) nonlinear transforms, network
// passes, and the per-sample empirical risk.

#include <vector>

#include "lpnet/core.hpp"

namespace lpnet {

struct TransformOutput {
  Vector values;
  std::vector<Eigen::Index> support;  // indices of nonzero values, ascending
};

/// Per-sample gNT parameters. p = t + sparsity * 1 is derived.
struct GntParams {
  Vector thresholds;   // t >= 0
  Vector normalizers;  // n > 0
  Vector correction;   // nu
  double sparsity = 0.0;

  static GntParams identity(Eigen::Index m, double sparsity);
  Vector effective_threshold() const;
  void validate() const;
};

/// Column-wise gNT parameters for a whole representation matrix.
struct GntParamSet {
  Matrix thresholds;
  Matrix normalizers;
  Matrix correction;
  double sparsity = 0.0;

  GntParams column(Eigen::Index j) const;
};

TransformOutput snt_apply(const Eigen::Ref<const Vector>& q, double tau);
TransformOutput gnt_apply(const Eigen::Ref<const Vector>& q, const GntParams& params);

/// Column-wise soft threshold.
Matrix snt_columns(const Eigen::Ref<const Matrix>& q, double tau);

/// [U_0 = Y_0, U_1, ..., U_up_to] with U_l = snt(A_{l-1} U_{l-1}, tau_l).
std::vector<Matrix> forward_pass(const Network& net, const Eigen::Ref<const Matrix>& y0, int up_to);

/// Same pass with explicitly supplied weights (asynchronous stage one).
std::vector<Matrix> forward_pass(const std::vector<const Matrix*>& weights,
                                 const std::vector<double>& thresholds,
                                 const Eigen::Ref<const Matrix>& y0, int up_to);

/// [U_from, U_{from-1}, ..., U_down_to] with U_l = snt(B_l U_{l+1}, tau_l).
/// Level 0 carries no threshold, so a pass down to the data is linear at the end.
std::vector<Matrix> backward_pass(const Network& net, const Eigen::Ref<const Matrix>& u_top,
                                  int from, int down_to);

/// xi = t^T |u| + nu^T u + n^T (u .* u). Signed.
double empirical_risk(const Eigen::Ref<const Vector>& u, const GntParams& params);

/// (1 / CK) * sum of the column risks.
double empirical_risk_mean(const Eigen::Ref<const Matrix>& u, const GntParamSet& params);

}  // namespace lpnet
