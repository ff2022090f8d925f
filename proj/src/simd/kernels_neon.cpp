#include <arm_neon.h>

#include "triad/simd.hpp"

namespace triad::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_dev_neon(const double* x, std::size_t n, double mean) {
  const float64x2_t vm = vdupq_n_f64(mean);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vm);
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void gemv_neon(const double* a, std::size_t rows, std::size_t cols, const double* x,
               const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_neon(a + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc_neon(const double* a, std::size_t rows, std::size_t cols, const double* g,
                     double* x_grad) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_neon(g[r], a + r * cols, x_grad, cols);
  }
}

void ger_acc_neon(double* a, std::size_t rows, std::size_t cols, const double* g,
                  const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_neon(g[r], x, a + r * cols, cols);
  }
}

}  // namespace

const KernelTable kNeonTable{dot_neon,  axpy_neon,       sum_sq_dev_neon,
                             gemv_neon, gemv_t_acc_neon, ger_acc_neon};

}  // namespace triad::simd::detail
