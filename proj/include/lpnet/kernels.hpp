#pragma once
// Elementwise and reduction kernels with a scalar reference implementation and
// SIMD variants selected at runtime. Elementwise kernels produce bitwise
// identical results on every path; reductions agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace lpnet::kernels {

enum class Isa { scalar, avx2 };

std::string_view name(Isa isa);

/// Best ISA supported by this CPU and build.
Isa detect();

/// ISA used by the dispatching entry points below. Initialized from detect(),
/// or from the LPNET_SIMD environment variable ("scalar" / "avx2") when set.
Isa active();

/// Forces an ISA (tests). Requesting an unsupported ISA falls back to scalar.
void set_active(Isa isa);

bool supported(Isa isa);

/// out_i = sign(in_i) * max(|in_i| - tau, 0). Thresholded entries are +0.
void soft_threshold(std::span<const double> in, double tau, std::span<double> out);

/// out_i = sign(b_i) * max(|b_i| - p_i, 0) / d_i with b = in - shift.
void shrink(std::span<const double> in, std::span<const double> shift,
            std::span<const double> thresh, std::span<const double> divisor,
            std::span<double> out);

/// out_i = a_i - rho * (a_i - b_i).
void step_back(std::span<const double> a, std::span<const double> b, double rho,
               std::span<double> out);

/// sum_i (a_i - b_i)^2.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Per-ISA tables, exposed for equivalence tests.
struct Table {
  void (*soft_threshold)(const double*, double, double*, std::size_t);
  void (*shrink)(const double*, const double*, const double*, const double*, double*,
                 std::size_t);
  void (*step_back)(const double*, const double*, double, double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
};

const Table& table(Isa isa);

namespace scalar {
void soft_threshold(const double* in, double tau, double* out, std::size_t n);
void shrink(const double* in, const double* shift, const double* thresh, const double* divisor,
            double* out, std::size_t n);
void step_back(const double* a, const double* b, double rho, double* out, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#if defined(LPNET_HAVE_AVX2)
namespace avx2 {
void soft_threshold(const double* in, double tau, double* out, std::size_t n);
void shrink(const double* in, const double* shift, const double* thresh, const double* divisor,
            double* out, std::size_t n);
void step_back(const double* a, const double* b, double rho, double* out, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

}  // namespace lpnet::kernels
