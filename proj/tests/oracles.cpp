#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double rep_objective_1d(double x, double t, double nu, double n, double l1, double y) {
  return 0.5 * (x - y) * (x - y) + nu * y + (l1 + t) * std::fabs(y) + n * y * y;
}

double rep_objective(const Vector& x, const Vector& t, const Vector& nu, const Vector& n, double l1,
                     const Vector& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) total += rep_objective_1d(x[i], t[i], nu[i], n[i], l1, y[i]);
  return total;
}

double grid_min_1d(double x, double t, double nu, double n, double l1, double lo, double hi, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double y = lo + (hi - lo) * i / (points - 1);
    best = std::min(best, rep_objective_1d(x, t, nu, n, l1, y));
  }
  return best;
}

double discrimination_pairs(const Matrix& w, std::span<const int> labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.cols(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) continue;
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const double a = w(r, i), b = w(r, j);
        total += std::max(a, 0.0) * std::max(b, 0.0) + std::max(-a, 0.0) * std::max(-b, 0.0) + a * a * b * b;
      }
    }
  return total;
}

long support_overlap(const Matrix& w, std::span<const int> labels) {
  long count = 0;
  for (Eigen::Index i = 0; i < w.cols(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) continue;
      for (Eigen::Index r = 0; r < w.rows(); ++r) count += w(r, i) != 0.0 && w(r, j) != 0.0;
    }
  return count;
}

namespace {

Matrix product(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

double sum_sq(const Matrix& m) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += m(i, j) * m(i, j);
  return s;
}

double inner(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += a(i, j) * b(i, j);
  return s;
}

Matrix resolved_b(const lpnet::LocalProblem& p, const std::optional<Matrix>& b) {
  return p.tied ? Matrix(p.a_next->transpose()) : *b;
}

}  // namespace

lpnet::ObjectiveBreakdown naive_objective(const lpnet::LocalProblem& p, const lpnet::LocalVariables& v) {
  const auto& w = p.weights;
  const Matrix& a = v.a_prev;
  const Matrix q = product(a, p.u_prev);
  lpnet::ObjectiveBreakdown o;
  o.r1 = 0.5 * sum_sq(p.gamma * q - v.y);
  Matrix b;
  if (p.has_next()) {
    b = resolved_b(p, v.b);
    o.r1 += 0.5 * sum_sq(product(b, *p.u_next) - v.y);
  }

  o.r2 = 0.5 * w.frobenius * sum_sq(a);
  const Matrix aat = product(a, Matrix(a.transpose()));
  o.r2 += 0.5 * w.orthogonality * sum_sq(aat - Matrix::Identity(a.rows(), a.rows()));
  if (w.log_det != 0.0) {
    const Matrix gram = a.rows() <= a.cols() ? aat : product(Matrix(a.transpose()), a);
    o.r2 -= w.log_det * std::log(std::fabs(Eigen::FullPivLU<Matrix>(gram).determinant()));
  }
  if (!p.tied) {
    o.r2 += 0.5 * w.tying * sum_sq(a - p.b_prev->transpose());
    if (p.has_next()) o.r2 += 0.5 * w.tying * sum_sq(*p.a_next - b.transpose());
  }

  const Matrix te = v.y - q;
  o.r3 = w.backward_prop * inner(te, product(a, p.u_prev - p.g_prev));
  if (p.has_next()) o.r3 += w.forward_prop * inner(te, product(b, *p.u_next - *p.g_next));

  for (Eigen::Index j = 0; j < v.y.cols(); ++j)
    for (Eigen::Index i = 0; i < v.y.rows(); ++i) o.a_term += w.sparsity * std::fabs(v.y(i, j));
  if (p.discriminative) o.u_term = w.discrimination * discrimination_pairs(v.y, p.labels);
  o.total = o.r1 + o.r2 + o.r3 + o.a_term + o.u_term;
  return o;
}

Matrix forward_gradient(const lpnet::LocalProblem& p, const Matrix& y, const Matrix& a,
                        const std::optional<Matrix>& b) {
  const auto& w = p.weights;
  const Matrix& u = p.u_prev;
  const Matrix zb = u - p.g_prev;
  const Matrix au = a * u;
  Matrix g = p.gamma * (p.gamma * au - y) * u.transpose();
  g += w.frobenius * a;
  g += 2.0 * w.orthogonality * (a * a.transpose() - Matrix::Identity(a.rows(), a.rows())) * a;
  if (w.log_det != 0.0) {
    if (a.rows() <= a.cols())
      g -= 2.0 * w.log_det * (a * a.transpose()).inverse() * a;
    else
      g -= 2.0 * w.log_det * a * (a.transpose() * a).inverse();
  }
  if (!p.tied) g += w.tying * (a - p.b_prev->transpose());
  g += w.backward_prop * ((y - au) * zb.transpose() - a * (zb * u.transpose() + u * zb.transpose()));
  if (p.has_next()) g -= w.forward_prop * (resolved_b(p, b) * (*p.u_next - *p.g_next)) * u.transpose();
  return g;
}

Matrix descend_forward(const lpnet::LocalProblem& p, const Matrix& y, const std::optional<Matrix>& b,
                       Matrix a, int steps) {
  auto f = [&](const Matrix& x) {
    try {
      const double v = naive_objective(p, {y, x, b}).total;
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const lpnet::Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double fa = f(a);
  double step = 1e-3;
  for (int it = 0; it < steps; ++it) {
    const Matrix g = forward_gradient(p, y, a, b);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) break;
    bool moved = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Matrix cand = a - step * g;
      const double fc = f(cand);
      if (fc <= fa - 1e-4 * step * g2) {
        a = cand;
        fa = fc;
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return a;
}

Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      probe(i, j) = x(i, j) + h;
      const double up = f(probe);
      probe(i, j) = x(i, j) - h;
      const double down = f(probe);
      probe(i, j) = x(i, j);
      g(i, j) = (up - down) / (2.0 * h);
    }
  return g;
}

int knn_label(const Matrix& train, std::span<const int> labels, const Vector& q, int k) {
  std::vector<std::pair<double, int>> d;
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < train.rows(); ++i) s += (train(i, j) - q[i]) * (train(i, j) - q[i]);
    d.emplace_back(s, labels[static_cast<std::size_t>(j)]);
  }
  std::sort(d.begin(), d.end());
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> votes(static_cast<std::size_t>(classes), 0);
  std::vector<double> dist(static_cast<std::size_t>(classes), 0.0);
  for (int i = 0; i < k; ++i) {
    ++votes[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)];
    dist[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)] += std::sqrt(d[static_cast<std::size_t>(i)].first);
  }
  int best = -1;
  double best_mean = 0.0;
  for (int c = 0; c < classes; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (votes[i] == 0) continue;
    const double mean = dist[i] / votes[i];
    if (best < 0 || votes[i] > votes[static_cast<std::size_t>(best)] ||
        (votes[i] == votes[static_cast<std::size_t>(best)] && mean < best_mean)) {
      best = c;
      best_mean = mean;
    }
  }
  return best;
}

ProblemDraw random_problem(std::mt19937_64& rng, Eigen::Index m_prev, Eigen::Index m, Eigen::Index m_next,
                           Eigen::Index cols, bool tied, bool has_next, bool discriminative) {
  ProblemDraw d;
  auto& p = d.problem;
  p.level = 2;
  p.u_prev = gaussian(m_prev, cols, rng, 0.5);
  p.g_prev = gaussian(m_prev, cols, rng, 0.5);
  p.tied = tied;
  if (has_next) {
    p.u_next = gaussian(m_next, cols, rng, 0.5);
    p.g_next = gaussian(m_next, cols, rng, 0.5);
    p.a_next = gaussian(m_next, m, rng, 1.0 / std::sqrt(static_cast<double>(m)));
  }
  if (!tied) p.b_prev = gaussian(m_prev, m, rng, 1.0 / std::sqrt(static_cast<double>(m)));
  auto& w = p.weights;
  w.discrimination = uniform(rng, 0.05, 0.5);
  w.sparsity = uniform(rng, 0.0, 0.3);
  w.frobenius = uniform(rng, 0.1, 1.0);
  w.orthogonality = uniform(rng, 0.1, 1.0);
  w.log_det = uniform(rng, 0.1, 1.0);
  w.tying = uniform(rng, 0.1, 1.0);
  w.backward_prop = uniform(rng, 0.1, 1.0);
  w.forward_prop = uniform(rng, 0.1, 1.0);
  p.gamma = uniform(rng, 1.0, 2.0);
  p.discriminative = discriminative;
  p.num_classes = 3;
  for (Eigen::Index j = 0; j < cols; ++j) p.labels.push_back(static_cast<int>(j % 3));

  d.vars.y = gaussian(m, cols, rng, 0.5);
  d.vars.a_prev = gaussian(m, m_prev, rng, 1.0 / std::sqrt(static_cast<double>(m_prev)));
  if (!tied && has_next) d.vars.b = gaussian(m, m_next, rng, 1.0 / std::sqrt(static_cast<double>(m_next)));
  return d;
}

}  // namespace oracle
