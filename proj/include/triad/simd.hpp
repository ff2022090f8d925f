#pragma once

// Runtime-dispatched double-precision kernels. Every kernel has a portable
// scalar reference; vector variants (AVX2+FMA on x86-64, NEON on aarch64)
// must agree with it to rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace triad::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum((x - mean)^2)
  double (*sum_sq_dev)(const double* x, std::size_t n, double mean);
  // y = A x + b for row-major A (rows x cols); b may be null.
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x,
               const double* b, double* y);
  // x_grad += A^T g
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* g,
                     double* x_grad);
  // A += g x^T
  void (*ger_acc)(double* a, std::size_t rows, std::size_t cols, const double* g,
                  const double* x);
};

/// ISAs this binary was built with and the CPU supports. Scalar is always first.
std::vector<Isa> available_isas();

/// Best ISA available on this machine.
Isa detect_best();

/// Table for a specific ISA. Throws std::invalid_argument if unavailable.
const KernelTable& kernels_for(Isa isa);

/// Table currently used by the library.
const KernelTable& active();
Isa active_isa();

/// Overrides the active ISA (tests and benchmarking).
void set_active_isa(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Table;
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace triad::simd
