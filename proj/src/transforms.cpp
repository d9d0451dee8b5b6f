#include "lpnet/transforms.hpp"

#include <span>

#include "lpnet/kernels.hpp"

namespace lpnet {

namespace {

std::span<const double> view(const Eigen::Ref<const Vector>& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::vector<Eigen::Index> support_of(const Vector& v) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(i);
  return s;
}

}  // namespace

GntParams GntParams::identity(Eigen::Index m, double sparsity) {
  return {Vector::Zero(m), Vector::Ones(m), Vector::Zero(m), sparsity};
}

Vector GntParams::effective_threshold() const {
  return thresholds.array() + sparsity;
}

void GntParams::validate() const {
  if (thresholds.size() != normalizers.size() || thresholds.size() != correction.size())
    throw ShapeError("gNT parameter vectors differ in length");
  if ((thresholds.array() < 0.0).any()) throw ParameterError("gNT thresholds must be >= 0");
  if (!(normalizers.array() > 0.0).all()) throw ParameterError("gNT normalizers must be > 0");
  if (!(sparsity >= 0.0)) throw ParameterError("gNT sparsity weight must be >= 0");
}

GntParams GntParamSet::column(Eigen::Index j) const {
  return {thresholds.col(j), normalizers.col(j), correction.col(j), sparsity};
}

TransformOutput snt_apply(const Eigen::Ref<const Vector>& q, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("sNT threshold must be nonnegative");
  if (!q.allFinite()) throw ParameterError("sNT input must be finite");
  Vector u(q.size());
  kernels::soft_threshold(view(q), tau, view(u));
  auto support = support_of(u);
  return {std::move(u), std::move(support)};
}

TransformOutput gnt_apply(const Eigen::Ref<const Vector>& q, const GntParams& params) {
  if (q.size() != params.thresholds.size()) throw ShapeError("gNT input length");
  params.validate();
  const Vector p = params.effective_threshold();
  Vector y(q.size());
  kernels::shrink(view(q), view(params.correction), view(p), view(params.normalizers), view(y));
  auto support = support_of(y);
  return {std::move(y), std::move(support)};
}

Matrix snt_columns(const Eigen::Ref<const Matrix>& q, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("sNT threshold must be nonnegative");
  Matrix u(q.rows(), q.cols());
  const auto rows = static_cast<std::size_t>(q.rows());
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    kernels::soft_threshold({q.col(j).data(), rows}, tau, {u.col(j).data(), rows});
  return u;
}

std::vector<Matrix> forward_pass(const std::vector<const Matrix*>& weights,
                                 const std::vector<double>& thresholds,
                                 const Eigen::Ref<const Matrix>& y0, int up_to) {
  if (up_to < 0 || up_to > static_cast<int>(weights.size()))
    throw RangeError("forward pass target level " + std::to_string(up_to));
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(up_to) + 1);
  out.emplace_back(y0);
  for (int l = 1; l <= up_to; ++l) {
    const Matrix& a = *weights[static_cast<std::size_t>(l - 1)];
    if (a.cols() != out.back().rows())
      throw TopologyError("A_" + std::to_string(l - 1) + " expects " + std::to_string(a.cols()) +
                          " rows, got " + std::to_string(out.back().rows()));
    out.push_back(snt_columns(a * out.back(), thresholds[static_cast<std::size_t>(l - 1)]));
  }
  return out;
}

std::vector<Matrix> forward_pass(const Network& net, const Eigen::Ref<const Matrix>& y0, int up_to) {
  if (up_to < 0 || up_to > net.num_levels())
    throw RangeError("forward pass target level " + std::to_string(up_to));
  if (y0.rows() != net.dim(0))
    throw TopologyError("input has " + std::to_string(y0.rows()) + " rows, network expects " +
                        std::to_string(net.dim(0)));
  std::vector<const Matrix*> weights;
  std::vector<double> taus;
  for (int l = 0; l < net.num_levels(); ++l) {
    weights.push_back(&net.forward_weight(l));
    taus.push_back(net.threshold(l + 1));
  }
  return forward_pass(weights, taus, y0, up_to);
}

std::vector<Matrix> backward_pass(const Network& net, const Eigen::Ref<const Matrix>& u_top,
                                  int from, int down_to) {
  if (from < down_to) throw RangeError("backward pass from level below its target");
  if (down_to < 0 || from > net.num_levels()) throw RangeError("backward pass level range");
  if (u_top.rows() != net.dim(from))
    throw TopologyError("backward pass input rows do not match M_" + std::to_string(from));
  std::vector<Matrix> out;
  out.emplace_back(u_top);
  for (int l = from - 1; l >= down_to; --l) {
    Matrix q = net.apply_backward(l, out.back());
    out.push_back(l == 0 ? std::move(q) : snt_columns(q, net.threshold(l)));
  }
  return out;
}

double empirical_risk(const Eigen::Ref<const Vector>& u, const GntParams& params) {
  if (u.size() != params.thresholds.size() || u.size() != params.correction.size() ||
      u.size() != params.normalizers.size())
    throw ShapeError("empirical risk operand lengths differ");
  return params.thresholds.dot(u.cwiseAbs()) + params.correction.dot(u) +
         params.normalizers.dot(u.cwiseProduct(u));
}

double empirical_risk_mean(const Eigen::Ref<const Matrix>& u, const GntParamSet& params) {
  if (u.cols() == 0) return 0.0;
  if (params.thresholds.rows() != u.rows() || params.thresholds.cols() != u.cols() ||
      params.normalizers.rows() != u.rows() || params.normalizers.cols() != u.cols() ||
      params.correction.rows() != u.rows() || params.correction.cols() != u.cols())
    throw ShapeError("empirical risk parameter set shape");
  double total = 0.0;
  for (Eigen::Index j = 0; j < u.cols(); ++j) total += empirical_risk(u.col(j), params.column(j));
  return total / static_cast<double>(u.cols());
}

}  // namespace lpnet
