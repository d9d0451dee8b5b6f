// Compiled with -mavx2. Only reached through the dispatch table after a CPUID
// check, so nothing here may be inlined into portable code.

#include "lpnet/kernels.hpp"

#include <immintrin.h>

namespace lpnet::kernels::avx2 {

namespace {

inline __m256d shrink4(__m256d b, __m256d p) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d r = _mm256_sub_pd(_mm256_andnot_pd(sign_mask, b), p);
  const __m256d keep = _mm256_cmp_pd(r, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d signed_r = _mm256_or_pd(r, _mm256_and_pd(b, sign_mask));
  return _mm256_and_pd(signed_r, keep);
}

}  // namespace

void soft_threshold(const double* in, double tau, double* out, std::size_t n) {
  const __m256d p = _mm256_set1_pd(tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, shrink4(_mm256_loadu_pd(in + i), p));
  scalar::soft_threshold(in + i, tau, out + i, n - i);
}

void shrink(const double* in, const double* shift, const double* thresh, const double* divisor,
            double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d b = _mm256_sub_pd(_mm256_loadu_pd(in + i), _mm256_loadu_pd(shift + i));
    const __m256d y = shrink4(b, _mm256_loadu_pd(thresh + i));
    _mm256_storeu_pd(out + i, _mm256_div_pd(y, _mm256_loadu_pd(divisor + i)));
  }
  scalar::shrink(in + i, shift + i, thresh + i, divisor + i, out + i, n - i);
}

void step_back(const double* a, const double* b, double rho, double* out, std::size_t n) {
  const __m256d r = _mm256_set1_pd(rho);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d diff = _mm256_sub_pd(va, _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(va, _mm256_mul_pd(r, diff)));
  }
  scalar::step_back(a + i, b + i, rho, out + i, n - i);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + scalar::squared_distance(a + i, b + i, n - i);
}

}  // namespace lpnet::kernels::avx2
