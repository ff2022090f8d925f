#include "triad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triad/error.hpp"
#include "triad/simd.hpp"

namespace triad {

std::string to_string(RiskForm form) {
  return form == RiskForm::Quadratic ? "quadratic" : "norm";
}

RiskForm risk_form_from_string(const std::string& s) {
  if (s == "norm") return RiskForm::NormOfProduct;
  if (s == "quadratic") return RiskForm::Quadratic;
  throw Error(Errc::InvalidConfig, "unknown risk form '" + s + "'");
}

double portfolio_value(const WeightVector& weights, double capital, std::span<const double> relatives) {
  if (weights.size() != relatives.size()) {
    throw Error(Errc::DimensionMismatch, "weights and relatives differ in length");
  }
  return capital * simd::dot(weights.values(), relatives);
}

double strategy_risk(std::span<const double> weights, const Matrix& cov, RiskForm form) {
  if (cov.rows() != weights.size() || cov.cols() != weights.size()) {
    throw Error(Errc::DimensionMismatch, "covariance and weights differ in dimension");
  }
  const std::vector<double> sa = matvec(cov, weights);
  if (form == RiskForm::NormOfProduct) return norm2(sa);
  return std::sqrt(std::max(0.0, simd::dot(weights, sa)));
}

RiskBreakdown short_term_risk(const WeightVector& weights, const CovarianceEstimate& cov,
                              double sigma_beta, RiskForm form) {
  RiskBreakdown r;
  r.sigma_alpha = strategy_risk(weights.values(), cov.matrix, form);
  r.sigma_beta = sigma_beta;
  r.sigma_p = sigma_beta + r.sigma_alpha;
  return r;
}

double long_term_volatility(std::span<const double> daily_returns, int days_per_year) {
  if (daily_returns.empty()) throw Error(Errc::InsufficientData, "volatility needs T >= 2");
  const double n = static_cast<double>(daily_returns.size());
  const double mean = std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0) / n;
  const double ss = simd::active().sum_sq_dev(daily_returns.data(), daily_returns.size(), mean);
  return std::sqrt(static_cast<double>(days_per_year) / n * ss);
}

double sharpe_ratio(double annual_return, double risk_free, double volatility) {
  if (!(volatility > 0.0)) throw Error(Errc::ZeroVolatility, "Sharpe ratio undefined at zero volatility");
  return (annual_return - risk_free) / volatility;
}

double annual_return(std::span<const double> equity_curve, int days_per_year) {
  if (equity_curve.size() < 2) throw Error(Errc::InsufficientData, "annual return needs two points");
  const double growth = equity_curve.back() / equity_curve.front();
  const double periods = static_cast<double>(equity_curve.size() - 1);
  return std::pow(growth, static_cast<double>(days_per_year) / periods) - 1.0;
}

double max_drawdown(std::span<const double> equity_curve) {
  double peak = 0.0;
  double mdd = 0.0;
  for (double v : equity_curve) {
    peak = std::max(peak, v);
    mdd = std::max(mdd, (peak - v) / peak);
  }
  return mdd;
}

PerformanceReport make_report(std::vector<double> equity_curve, std::span<const double> short_term_risk,
                              const MetricsConfig& config) {
  if (equity_curve.size() < 2) throw Error(Errc::InsufficientData, "equity curve needs two points");
  PerformanceReport r;
  r.trading_days = equity_curve.size();
  r.daily_returns.resize(equity_curve.size() - 1);
  for (std::size_t t = 1; t < equity_curve.size(); ++t) {
    r.daily_returns[t - 1] = equity_curve[t] / equity_curve[t - 1] - 1.0;
  }
  r.mean_daily_return = std::accumulate(r.daily_returns.begin(), r.daily_returns.end(), 0.0) /
                        static_cast<double>(r.daily_returns.size());
  r.annual_return = annual_return(equity_curve, config.days_per_year);
  r.mdd = max_drawdown(equity_curve);
  r.long_term_vol = long_term_volatility(r.daily_returns, config.days_per_year);
  r.sharpe = r.long_term_vol > 0.0 ? sharpe_ratio(r.annual_return, config.risk_free, r.long_term_vol) : 0.0;
  if (!short_term_risk.empty()) {
    r.mean_short_term_risk = std::accumulate(short_term_risk.begin(), short_term_risk.end(), 0.0) /
                             static_cast<double>(short_term_risk.size());
  }
  r.risk_free = config.risk_free;
  r.equity_curve = std::move(equity_curve);
  return r;
}

}  // namespace triad
