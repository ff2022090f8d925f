#include "triad/linalg.hpp"

#include <cmath>

#include "triad/error.hpp"
#include "triad/simd.hpp"
#include "triad/weights.hpp"

namespace triad {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(Errc::DimensionMismatch, "matrix data does not match shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) throw Error(Errc::DimensionMismatch, "matvec operand size");
  std::vector<double> y(m.rows());
  simd::active().gemv(m.data().data(), m.rows(), m.cols(), x.data(), nullptr, y.data());
  return y;
}

double norm2(std::span<const double> x) { return std::sqrt(simd::dot(x, x)); }

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

WeightVector::WeightVector(std::vector<double> weights) : w_(std::move(weights)) {
  if (!is_valid(w_)) throw Error(Errc::InvalidAction, "weights are not on the simplex");
}

WeightVector WeightVector::uniform(std::size_t n) {
  WeightVector w;
  w.w_.assign(n, 1.0 / static_cast<double>(n));
  return w;
}

WeightVector WeightVector::vertex(std::size_t n, std::size_t i) {
  WeightVector w;
  w.w_.assign(n, 0.0);
  w.w_.at(i) = 1.0;
  return w;
}

bool WeightVector::is_valid(std::span<const double> w, double tol) {
  if (w.empty()) return false;
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace triad
