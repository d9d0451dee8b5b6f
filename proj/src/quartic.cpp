#include <algorithm>
#include <cmath>
#include <vector>

#include "lpnet/solvers.hpp"

namespace lpnet {

namespace {

// Coefficients highest degree first.
using Poly = std::vector<double>;

double eval(const Poly& p, double x) {
  double acc = 0.0;
  for (double c : p) acc = acc * x + c;
  return acc;
}

double magnitude(const Poly& p, double x) {
  double acc = 0.0;
  const double ax = std::fabs(x);
  for (double c : p) acc = acc * ax + std::fabs(c);
  return acc;
}

Poly derivative(const Poly& p) {
  const auto n = p.size() - 1;
  Poly d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = p[i] * static_cast<double>(n - i);
  return d;
}

// Root of p on [lo, hi] where p(lo) and p(hi) have opposite signs.
double bracketed_root(const Poly& p, double lo, double hi) {
  double flo = eval(p, lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = eval(p, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> real_roots(Poly p) {
  while (!p.empty() && p.front() == 0.0) p.erase(p.begin());
  if (p.empty()) throw ParameterError("polynomial has no nonzero coefficient");
  const std::size_t degree = p.size() - 1;
  if (degree == 0) return {};
  if (degree == 1) return {-p[1] / p[0]};
  if (degree == 2) {
    const double a = p[0], b = p[1], c = p[2];
    const double disc = b * b - 4.0 * a * c;
    const double scale = b * b + std::fabs(4.0 * a * c);
    if (disc < -1e-14 * scale) return {};
    if (disc <= 1e-14 * scale) return {-b / (2.0 * a)};
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    std::vector<double> r{q / a, c / q};
    std::sort(r.begin(), r.end());
    return r;
  }

  double bound = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) bound = std::max(bound, std::fabs(p[i] / p[0]));
  bound += 1.0;

  std::vector<double> points{-bound};
  for (double c : real_roots(derivative(p)))
    if (c > -bound && c < bound) points.push_back(c);
  points.push_back(bound);

  std::vector<double> roots;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const double x = points[i];
    if (std::fabs(eval(p, x)) <= 1e-12 * magnitude(p, x)) roots.push_back(x);
  }
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double lo = points[i], hi = points[i + 1];
    const double flo = eval(p, lo), fhi = eval(p, hi);
    if ((flo < 0.0 && fhi > 0.0) || (flo > 0.0 && fhi < 0.0))
      roots.push_back(bracketed_root(p, lo, hi));
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> merged;
  for (double r : roots)
    if (merged.empty() || std::fabs(r - merged.back()) > 1e-9 * (1.0 + std::fabs(r)))
      merged.push_back(r);
  return merged;
}

}  // namespace

std::vector<double> quartic_real_roots(double c4, double c3, double c2, double c1, double c0) {
  for (double c : {c4, c3, c2, c1, c0})
    if (!std::isfinite(c)) throw ParameterError("quartic coefficients must be finite");
  return real_roots({c4, c3, c2, c1, c0});
}

}  // namespace lpnet
