#include "lpnet/kernels.hpp"

#include <cmath>

namespace lpnet::kernels::scalar {

namespace {

// Shared by both elementwise shrink kernels so the rounding sequence is the
// same one the SIMD variants reproduce: subtract, clamp at zero, restore sign.
inline double shrink_one(double b, double p) {
  const double r = std::fabs(b) - p;
  return r > 0.0 ? std::copysign(r, b) : 0.0;
}

}  // namespace

void soft_threshold(const double* in, double tau, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = shrink_one(in[i], tau);
}

void shrink(const double* in, const double* shift, const double* thresh, const double* divisor,
            double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = shrink_one(in[i] - shift[i], thresh[i]) / divisor[i];
}

void step_back(const double* a, const double* b, double rho, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - rho * (a[i] - b[i]);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace lpnet::kernels::scalar
