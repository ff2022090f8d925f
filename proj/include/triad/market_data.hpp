#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "triad/linalg.hpp"

namespace triad {

/// Daily OHLCV panel; price matrices are T x N (day-major). Volume is not
/// used by any downstream computation and is dropped at load.
struct OhlcvSeries {
  std::vector<std::string> asset_ids;
  std::vector<std::string> dates;
  Matrix open;
  Matrix high;
  Matrix low;
  Matrix close;

  std::size_t days() const noexcept { return close.rows(); }
  std::size_t assets() const noexcept { return close.cols(); }

  /// Throws on any violated invariant (positive prices, shared axis, T >= 2).
  void validate() const;

  /// Days [begin, end).
  OhlcvSeries slice(std::size_t begin, std::size_t end) const;
};

/// Simple daily returns; row r holds close(r+1)/close(r) - 1, so there are T-1 rows.
struct ReturnsMatrix {
  Matrix values;
};

ReturnsMatrix daily_returns(const OhlcvSeries& series);

struct CovarianceEstimate {
  Matrix matrix;
  std::size_t window = 0;
  std::size_t anchor = 0;
};

enum class CsvLayout { Auto, Long, Wide };

struct CsvConfig {
  CsvLayout layout = CsvLayout::Auto;
  char delimiter = ',';
  std::string date_column = "date";
  std::string asset_column = "asset";
  std::string open_column = "open";
  std::string high_column = "high";
  std::string low_column = "low";
  std::string close_column = "close";
};

OhlcvSeries load_ohlcv(const std::filesystem::path& path, const CsvConfig& config = {});
OhlcvSeries parse_ohlcv(std::istream& in, const CsvConfig& config = {});

/// Long-format CSV: date,asset,open,high,low,close. Values are written with
/// round-trip precision.
void write_ohlcv_csv(std::ostream& out, const OhlcvSeries& series, char delimiter = ',');

/// close(t, i) / close(t-1, i) for every asset; requires 1 <= t <= T-1.
std::vector<double> price_relatives(const OhlcvSeries& series, std::size_t t);

/// Sample covariance (divisor k-1) of the k daily returns observed strictly
/// before day t: return rows t-1-k .. t-2, i.e. close prices 0..t-1 only.
/// Requires k >= 2 and t >= k + 1.
CovarianceEstimate rolling_covariance(const ReturnsMatrix& returns, std::size_t t, std::size_t k);

struct Regime {
  double drift = 0.0;       // per-day expected growth, e.g. 0.001 = +0.1%/day
  double volatility = 0.0;  // per-day log-volatility
  std::int64_t length = 0;  // trading days
  double correlation = 0.0; // pairwise, in [0, 1]
  std::vector<double> asset_drift;      // optional per-asset override of drift
  std::vector<double> asset_vol_scale;  // optional per-asset volatility multiplier
};

struct SynthSpec {
  std::size_t assets = 5;
  double initial_price = 100.0;
  std::string start_date = "2000-01-03";
  std::vector<std::string> asset_ids;  // defaults to A0..A{N-1}
  std::vector<Regime> regimes;
};

/// Geometric random walk per regime, regimes concatenated:
/// close(t) = close(t-1) * (1 + drift) * exp(vol * z - vol^2 / 2), z equicorrelated
/// standard normals. Identical (spec, seed) gives bit-identical output.
OhlcvSeries synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// Weekday calendar starting at `start` (ISO date).
std::vector<std::string> business_days(const std::string& start, std::size_t count);

bool is_iso_date(const std::string& s);

}  // namespace triad
