// Forward weight update.
//
// In A = A_{l-1} the local objective is
//   F(A) = Tr(A R_Q A^T) + (l3/2)||A A^T - I||^2 - l4 log det(Gram A) - Tr(A^T R_L) + const
// with R_Q, R_L from forward_weight_terms. Two aligned closed forms are built
// and the one with the lower F is kept.
//
// Whitened: writing sym(R_Q) + shift*I = V S^2 V^T and A = W S^-1 V^T turns
// the quadratic part into ||W||^2. W is taken aligned with the SVD
// P diag(s) Q^T of R_L V S^-1, W = P diag(sigma) Q^T, which leaves one scalar
// problem per singular index:
//   phi(sigma) = (1 - (shift + l3) d) sigma^2 + (l3/2) d^2 sigma^4
//                - 2 l4 log sigma - s sigma,   d = (Q^T S^-2 Q)_nn.
// Its stationary points are the nonnegative roots of
//   2 l3 d^2 sigma^4 + 2 (1 - (shift + l3) d) sigma^2 - s sigma - 2 l4 = 0.
// That first pass keeps only the diagonal K_nn = d of K = Q^T S^-2 Q in the
// quartic Gram term ||A A^T||^2 = sum_mn sigma_m^2 sigma_n^2 K_mn^2. Coordinate
// sweeps then restore the off-diagonal part: with the other indices fixed,
// index n sees the same quartic with c2 raised by l3 sum_{m!=n} sigma_m^2 K_mn^2.
//
// Isotropic: A = P diag(sigma) Q^T with P, Q from the SVD of R_L itself. Every
// regularizer depends on A only through sigma, and Tr(A R_Q A^T) =
// sum_n sigma_n^2 (Q^T R_Q Q)_nn, so the per-index problems are exact:
//   phi(sigma) = (r_n - l3) sigma^2 + (l3/2) sigma^4 - 2 l4 log sigma - s sigma.
// The whitened form wins when R_Q is strongly anisotropic, the isotropic one
// when the orthogonality and log-det terms dominate.

#include <algorithm>
#include <cmath>
#include <limits>

#include "lpnet/solvers.hpp"

namespace lpnet {

namespace {

constexpr double kSigmaFallback = 1e-8;
constexpr int kSigmaSweeps = 50;

struct ScalarProblem {
  double c4;  // coefficient of sigma^4 in phi
  double c2;  // coefficient of sigma^2 in phi
  double s;
  double l4;

  double phi(double sigma) const {
    const double s2 = sigma * sigma;
    double v = c2 * s2 + c4 * s2 * s2 - s * sigma;
    if (l4 != 0.0) v -= 2.0 * l4 * std::log(sigma);
    return v;
  }

  /// Admissible stationary point with the lowest phi; negative when none.
  double minimize() const {
    // sigma * phi'(sigma) = 4 c4 sigma^4 + 2 c2 sigma^2 - s sigma - 2 l4
    const auto roots = quartic_real_roots(4.0 * c4, 0.0, 2.0 * c2, -s, -2.0 * l4);
    double best = std::numeric_limits<double>::infinity();
    double best_sigma = -1.0;
    for (double r : roots) {
      if (r < 0.0 || (r == 0.0 && l4 > 0.0)) continue;
      const double v = phi(r);
      if (v < best) {
        best = v;
        best_sigma = r;
      }
    }
    return best_sigma;
  }
};

}  // namespace

ForwardWeightTerms forward_weight_terms(const LocalProblem& problem, const Matrix& y,
                                        const std::optional<Matrix>& b) {
  const auto& w = problem.weights;
  const Matrix& u = problem.u_prev;
  const Matrix z_be = u - problem.g_prev;
  const double tying = problem.tied ? 0.0 : w.tying;

  ForwardWeightTerms t;
  Matrix cross = z_be * u.transpose();
  t.quadratic = 0.5 * problem.gamma * problem.gamma * (u * u.transpose()) -
                0.5 * w.backward_prop * (cross + cross.transpose());
  t.quadratic.diagonal().array() += 0.5 * (w.frobenius + tying);

  t.linear = problem.gamma * (y * u.transpose()) - w.backward_prop * (y * z_be.transpose());
  if (problem.has_next()) {
    const Matrix z_fe = problem.resolve_backward(b) * (*problem.u_next - *problem.g_next);
    t.linear += w.forward_prop * (z_fe * u.transpose());
  }
  if (!problem.tied) t.linear += tying * problem.b_prev->transpose();
  return t;
}

namespace {

void check_bounded(const ScalarProblem& sp, Eigen::Index n) {
  if (sp.c4 == 0.0 && (sp.c2 < 0.0 || (sp.c2 == 0.0 && (sp.s > 0.0 || sp.l4 > 0.0))))
    throw ConditioningError("forward-weight objective is unbounded below along singular index " +
                            std::to_string(n));
}

/// First pass of every index; zero when phi vanishes identically.
double solve_index(const ScalarProblem& sp, Eigen::Index n, int& fallbacks) {
  check_bounded(sp, n);
  if (sp.c4 == 0.0 && sp.c2 == 0.0 && sp.s == 0.0 && sp.l4 == 0.0) return 0.0;
  const double sigma = sp.minimize();
  if (sigma >= 0.0) return sigma;
  ++fallbacks;
  return kSigmaFallback;
}

Matrix whitened(const ForwardWeightTerms& terms, double l3, double l4, ForwardWeightReport& report) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(terms.quadratic);
  if (eig.info() != Eigen::Success) throw ConditioningError("eigendecomposition of R_Q failed");
  const Vector& lambda = eig.eigenvalues();
  const double lambda_min = lambda.minCoeff();
  const double floor = 1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
  const double shift = std::max(0.0, floor - lambda_min);
  const Vector sx_inv = (lambda.array() + shift).sqrt().inverse().matrix();
  report.min_eigenvalue = lambda_min;
  report.shift = shift;

  const Matrix rotated = terms.linear * eig.eigenvectors() * sx_inv.asDiagonal();
  Eigen::BDCSVD<Matrix> svd(rotated, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix& q = svd.matrixV();
  const Vector& s = svd.singularValues();
  const Matrix k = q.transpose() * sx_inv.cwiseAbs2().asDiagonal() * q;
  const Vector d = k.diagonal();

  auto scalar = [&](Eigen::Index n) {
    ScalarProblem sp{0.5 * l3 * d[n] * d[n], 1.0 - (shift + l3) * d[n], s[n], l4};
    if (std::fabs(sp.c2) <= 1e-9) sp.c2 = 0.0;
    return sp;
  };
  Vector sigma(s.size());
  for (Eigen::Index n = 0; n < s.size(); ++n) sigma[n] = solve_index(scalar(n), n, report.fallbacks);

  if (l3 > 0.0 && s.size() > 1) {
    const Matrix k2 = k.cwiseAbs2();
    for (int sweep = 0; sweep < kSigmaSweeps; ++sweep) {
      double change = 0.0;
      for (Eigen::Index n = 0; n < s.size(); ++n) {
        ScalarProblem sp = scalar(n);
        sp.c2 += l3 * (k2.col(n).dot(sigma.cwiseAbs2()) - k2(n, n) * sigma[n] * sigma[n]);
        const double next = sp.minimize();
        if (next < 0.0 || !(sp.phi(next) <= sp.phi(sigma[n]))) continue;
        change = std::max(change, std::fabs(next - sigma[n]));
        sigma[n] = next;
      }
      if (change <= 1e-12 * (1.0 + sigma.maxCoeff())) break;
    }
  }
  return svd.matrixU() * sigma.asDiagonal() * q.transpose() * sx_inv.asDiagonal() *
         eig.eigenvectors().transpose();
}

Matrix isotropic(const ForwardWeightTerms& terms, double l3, double l4, int& fallbacks) {
  Eigen::BDCSVD<Matrix> svd(terms.linear, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix& q = svd.matrixV();
  const Vector& s = svd.singularValues();
  const Vector r = (q.transpose() * terms.quadratic).cwiseProduct(q.transpose()).rowwise().sum();
  Vector sigma(s.size());
  for (Eigen::Index n = 0; n < s.size(); ++n) {
    ScalarProblem sp{0.5 * l3, r[n] - l3, s[n], l4};
    if (std::fabs(sp.c2) <= 1e-9 * std::max(1.0, std::fabs(r[n]))) sp.c2 = 0.0;
    sigma[n] = solve_index(sp, n, fallbacks);
  }
  return svd.matrixU() * sigma.asDiagonal() * q.transpose();
}

/// F(A) without the constant; infinite off the log-det domain.
double reduced_objective(const ForwardWeightTerms& terms, const Matrix& a, double l3, double l4) {
  double v = (a * terms.quadratic).cwiseProduct(a).sum() - a.cwiseProduct(terms.linear).sum();
  try {
    v += eval_regularizer_V(a, 0.0, l3, l4);
  } catch (const SingularityError&) {
    return std::numeric_limits<double>::infinity();
  }
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Matrix estimate_forward_weight(const LocalProblem& problem, const Matrix& y,
                               const std::optional<Matrix>& b, ForwardWeightReport* report) {
  const Eigen::Index m_in = problem.u_prev.rows();
  const Eigen::Index m_out = y.rows();
  problem.validate(y, Matrix::Zero(m_out, m_in), b ? &*b : nullptr);
  const double l3 = problem.weights.orthogonality;
  const double l4 = problem.weights.log_det;
  const auto terms = forward_weight_terms(problem, y, b);

  ForwardWeightReport info;
  Matrix a = whitened(terms, l3, l4, info);
  int iso_fallbacks = 0;
  Matrix alt = isotropic(terms, l3, l4, iso_fallbacks);
  if (reduced_objective(terms, alt, l3, l4) < reduced_objective(terms, a, l3, l4)) {
    a = std::move(alt);
    info.fallbacks = iso_fallbacks;
    info.isotropic = true;
  }
  if (report) *report = info;
  return a;
}

}  // namespace lpnet
