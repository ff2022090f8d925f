#include "triad/simd.hpp"

namespace triad::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_dev_scalar(const double* x, std::size_t n, double mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_scalar(a + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc_scalar(const double* a, std::size_t rows, std::size_t cols, const double* g,
                       double* x_grad) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_scalar(g[r], a + r * cols, x_grad, cols);
  }
}

void ger_acc_scalar(double* a, std::size_t rows, std::size_t cols, const double* g,
                    const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_scalar(g[r], x, a + r * cols, cols);
  }
}

}  // namespace

const KernelTable kScalarTable{dot_scalar,  axpy_scalar,       sum_sq_dev_scalar,
                               gemv_scalar, gemv_t_acc_scalar, ger_acc_scalar};

}  // namespace triad::simd::detail
