#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "triad/error.hpp"
#include "triad/linalg.hpp"
#include "triad/market_data.hpp"
#include "triad/weights.hpp"

#define CHECK_ERRC(expr, errc)                                        \
  do {                                                                \
    try {                                                             \
      (void)(expr);                                                   \
      FAIL_CHECK("expected " #errc);                                  \
    } catch (const triad::Error& e_) {                                \
      CHECK_MESSAGE(e_.code() == (errc), e_.what());                  \
    }                                                                 \
  } while (0)

namespace testing {

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) s += (v = e(rng));
  for (auto& v : w) v /= s;
  return w;
}

/// B B^T / n with B having standard normal entries scaled by `scale`.
inline triad::Matrix random_psd(std::size_t n, std::mt19937_64& rng, double scale = 0.01) {
  std::normal_distribution<double> z(0.0, scale);
  triad::Matrix b(n, n);
  for (auto& v : b.data()) v = z(rng);
  triad::Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

inline double norm_sigma_a(const triad::Matrix& cov, const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < cov.cols(); ++j) r += cov(i, j) * a[j];
    s += r * r;
  }
  return std::sqrt(s);
}

/// Close-only panel with identical OHLC; dates are consecutive weekdays.
inline triad::OhlcvSeries panel(const std::vector<std::vector<double>>& closes) {
  triad::OhlcvSeries s;
  const std::size_t t = closes.size(), n = closes.front().size();
  for (std::size_t i = 0; i < n; ++i) s.asset_ids.push_back("A" + std::to_string(i));
  s.dates = triad::business_days("2020-01-01", t);
  s.close = triad::Matrix(t, n);
  for (std::size_t d = 0; d < t; ++d)
    for (std::size_t i = 0; i < n; ++i) s.close(d, i) = closes[d][i];
  s.open = s.high = s.low = s.close;
  return s;
}

inline triad::OhlcvSeries random_walk(std::size_t t, std::size_t n, std::uint64_t seed, double vol = 0.01) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, vol);
  std::vector<std::vector<double>> closes(t, std::vector<double>(n, 100.0));
  for (std::size_t d = 1; d < t; ++d)
    for (std::size_t i = 0; i < n; ++i) closes[d][i] = closes[d - 1][i] * std::exp(z(rng));
  return panel(closes);
}

}  // namespace testing
