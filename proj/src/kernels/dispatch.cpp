#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "lpnet/kernels.hpp"

namespace lpnet::kernels {

namespace {

constexpr Table kScalar{scalar::soft_threshold, scalar::shrink, scalar::step_back,
                        scalar::squared_distance};
#if defined(LPNET_HAVE_AVX2)
constexpr Table kAvx2{avx2::soft_threshold, avx2::shrink, avx2::step_back,
                      avx2::squared_distance};
#endif

Isa initial() {
  if (const char* env = std::getenv("LPNET_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && supported(Isa::avx2)) return Isa::avx2;
  }
  return detect();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial()};
  return isa;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::length_error("kernel operand sizes differ");
}

}  // namespace

std::string_view name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(LPNET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa detect() { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active() { return current().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  current().store(supported(isa) ? isa : Isa::scalar, std::memory_order_relaxed);
}

const Table& table(Isa isa) {
#if defined(LPNET_HAVE_AVX2)
  if (isa == Isa::avx2 && supported(Isa::avx2)) return kAvx2;
#else
  (void)isa;
#endif
  return kScalar;
}

void soft_threshold(std::span<const double> in, double tau, std::span<double> out) {
  check_sizes(in.size(), out.size());
  table(active()).soft_threshold(in.data(), tau, out.data(), in.size());
}

void shrink(std::span<const double> in, std::span<const double> shift,
            std::span<const double> thresh, std::span<const double> divisor,
            std::span<double> out) {
  check_sizes(in.size(), shift.size());
  check_sizes(in.size(), thresh.size());
  check_sizes(in.size(), divisor.size());
  check_sizes(in.size(), out.size());
  table(active()).shrink(in.data(), shift.data(), thresh.data(), divisor.data(), out.data(),
                         in.size());
}

void step_back(std::span<const double> a, std::span<const double> b, double rho,
               std::span<double> out) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), out.size());
  table(active()).step_back(a.data(), b.data(), rho, out.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return table(active()).squared_distance(a.data(), b.data(), a.size());
}

}  // namespace lpnet::kernels
