#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "triad/linalg.hpp"
#include "triad/market_data.hpp"
#include "triad/weights.hpp"

namespace triad {

WeightVector crp_weights(std::size_t n);

/// w_i * exp(eta * x_i / (w . x)), renormalized.
WeightVector eg_update(const WeightVector& w, std::span<const double> relatives, double eta);

/// Mean-reversion step toward predicted relatives x_hat:
/// lambda = max(0, (eps - w.x_hat) / ||x_hat - mean(x_hat)||^2), then projection.
WeightVector olmar_step(const WeightVector& w, std::span<const double> predicted, double epsilon);

/// OLMAR with moving-average prediction over the last `window` rows of `prices`
/// (oldest first, last row = today): x_hat_i = mean_k p_k,i / p_today,i.
WeightVector olmar_update(const WeightVector& w, const Matrix& prices, std::size_t window, double epsilon);

/// tau = max(0, w.x - eps) / ||x - mean(x)||^2; w - tau (x - mean(x)), projected.
WeightVector pamr_update(const WeightVector& w, std::span<const double> relatives, double epsilon);

struct L1MedianResult {
  std::vector<double> median;
  std::vector<std::vector<double>> trace;  // iterates, starting point first
  std::size_t iterations = 0;
};

/// Weiszfeld iteration with the Vardi-Zhang modification for iterates that
/// land on a data point. Rows of `points` are the samples.
L1MedianResult l1_median(const Matrix& points, std::size_t max_iter = 200, double tol = 1e-9);

/// RMR: x_hat = L1-median of the last `window` price rows / today's prices,
/// followed by the OLMAR step.
WeightVector rmr_update(const WeightVector& w, const Matrix& prices, std::size_t window, double epsilon);

/// CORN: match past w-day relative windows (rows of `relatives`, oldest first)
/// whose Pearson correlation with the latest window is >= rho, then maximize
/// mean log growth over their next-day relatives by projected gradient.
WeightVector corn_weights(const Matrix& relatives, std::size_t window, double rho);

/// Projected-gradient maximizer of mean log(w . x) over sample rows.
WeightVector log_optimal_weights(const std::vector<std::vector<double>>& samples, std::size_t n,
                                 std::size_t iterations = 500, double step = 0.05);

struct StrategyParams {
  double eg_eta = 0.05;
  std::size_t olmar_window = 5;
  double olmar_epsilon = 10.0;
  double pamr_epsilon = 0.5;
  std::size_t rmr_window = 5;
  double rmr_epsilon = 5.0;
  std::size_t corn_window = 5;
  double corn_rho = 0.1;

  void validate() const;
};

/// Online strategy driven day by day over one price panel. decide(t) may read
/// close prices for days 0..t only; the first call is made at the episode start.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string name() const = 0;
  virtual void reset(std::size_t assets) = 0;
  virtual WeightVector decide(const OhlcvSeries& series, std::size_t t) = 0;
};

std::unique_ptr<Strategy> make_strategy(const std::string& name, const StrategyParams& params = {});

/// crp, eg, olmar, pamr, rmr, corn.
const std::vector<std::string>& baseline_names();

}  // namespace triad
