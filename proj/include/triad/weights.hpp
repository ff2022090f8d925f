#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace triad {

/// Portfolio allocation on the probability simplex: every element is
/// non-negative and the elements sum to one within kSimplexTolerance.
class WeightVector {
 public:
  static constexpr double kSimplexTolerance = 1e-9;

  WeightVector() = default;

  /// Validates; throws Error(InvalidAction) when off the simplex.
  explicit WeightVector(std::vector<double> weights);

  static WeightVector uniform(std::size_t n);
  static WeightVector vertex(std::size_t n, std::size_t i);

  /// True when `w` satisfies the simplex invariant.
  static bool is_valid(std::span<const double> w, double tol = kSimplexTolerance);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }
  const std::vector<double>& vec() const noexcept { return w_; }

  auto begin() const noexcept { return w_.begin(); }
  auto end() const noexcept { return w_.end(); }

  bool operator==(const WeightVector&) const = default;

 private:
  std::vector<double> w_;
};

}  // namespace triad
