#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "triad/market_data.hpp"
#include "triad/weights.hpp"

namespace triad {

/// How the strategy risk sigma_alpha is computed from weights A and Sigma.
enum class RiskForm {
  NormOfProduct,  // ||Sigma A||_2 (default)
  Quadratic,      // sqrt(A^T Sigma A)
};

std::string to_string(RiskForm form);
/// "norm" | "quadratic"; throws Error(InvalidConfig) otherwise.
RiskForm risk_form_from_string(const std::string& s);

struct RiskBreakdown {
  double sigma_alpha = 0.0;
  double sigma_beta = 0.0;
  double sigma_p = 0.0;
};

/// capital * (weights . relatives): the value of `capital` allocated by
/// `weights` after one period of price relatives.
double portfolio_value(const WeightVector& weights, double capital, std::span<const double> relatives);

/// sigma_alpha alone, on raw spans (hot path for the solver).
double strategy_risk(std::span<const double> weights, const Matrix& cov,
                     RiskForm form = RiskForm::NormOfProduct);

RiskBreakdown short_term_risk(const WeightVector& weights, const CovarianceEstimate& cov,
                              double sigma_beta = 0.0, RiskForm form = RiskForm::NormOfProduct);

/// Annualized volatility sqrt(days/(T-1) * sum (r - mean)^2), where T-1 is the
/// number of daily returns supplied.
double long_term_volatility(std::span<const double> daily_returns, int days_per_year = 252);

double sharpe_ratio(double annual_return, double risk_free, double volatility);

/// (C_last / C_0)^(days / (len - 1)) - 1.
double annual_return(std::span<const double> equity_curve, int days_per_year = 252);

/// Largest peak-to-trough loss as a fraction of the peak; 0 for empty curves.
double max_drawdown(std::span<const double> equity_curve);

struct MetricsConfig {
  double risk_free = 0.0;
  double sigma_beta = 0.0;
  int days_per_year = 252;
};

struct PerformanceReport {
  std::vector<double> equity_curve;
  std::vector<double> daily_returns;
  double mean_daily_return = 0.0;
  double annual_return = 0.0;
  double mdd = 0.0;
  double long_term_vol = 0.0;
  double sharpe = 0.0;
  double mean_short_term_risk = 0.0;
  double risk_free = 0.0;
  std::size_t trading_days = 0;
};

/// Builds the report from an equity curve and the per-day sigma_p series.
/// A zero-volatility curve yields sharpe = 0.
PerformanceReport make_report(std::vector<double> equity_curve, std::span<const double> short_term_risk,
                              const MetricsConfig& config);

struct RankSumResult {
  double statistic = 0.0;  // rank sum of sample_a (mid-ranks for ties)
  double p_value = 1.0;
  bool significant = false;
  bool exact = false;
};

/// Two-sided Wilcoxon rank-sum test. Exact permutation distribution when both
/// samples have fewer than 8 observations, otherwise the normal approximation
/// with tie-corrected variance and continuity correction.
RankSumResult wilcoxon_rank_sum(std::span<const double> sample_a, std::span<const double> sample_b,
                                double alpha = 0.05);

}  // namespace triad
