#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "triad/market_data.hpp"
#include "triad/observation.hpp"
#include "triad/weights.hpp"

namespace triad {

struct EnvConfig {
  std::size_t window = 10;  // W
  double c_tx = 0.0;        // proportional cost on half-turnover
  double c0 = 1.0;          // initial capital

  void validate() const;
};

struct EnvState {
  double capital = 0.0;
  WeightVector holdings;
  std::size_t day = 0;
  bool done = true;
  double cost_paid = 0.0;
};

struct StepResult {
  Observation o_next;
  double growth = 1.0;  // C_{t+1} / C_t
  bool done = false;
};

/// holdings_i * rel_i / sum_j holdings_j * rel_j.
WeightVector drifted_holdings(const WeightVector& holdings, std::span<const double> relatives);

inline std::size_t observation_size(std::size_t window, std::size_t assets) {
  return window * assets + assets + kMarketVectorSize;
}

/// Close-to-close portfolio environment: an order placed on day t is filled
/// at day-t close and earns the day t -> t+1 price relatives.
class TradingEnv {
 public:
  TradingEnv(const OhlcvSeries& series, EnvConfig config);

  /// Capital C0, uniform holdings, day W. Clears the market vector.
  Observation reset();

  StepResult step(const WeightVector& a_final);

  /// Market vector appended to subsequent observations.
  void set_market_vector(std::span<const double> v_m);

  Observation observe() const;

  const EnvState& state() const noexcept { return state_; }
  const EnvConfig& config() const noexcept { return config_; }
  std::size_t assets() const noexcept { return relatives_.cols(); }
  std::size_t days() const noexcept { return relatives_.rows(); }
  std::size_t observation_size() const { return triad::observation_size(config_.window, assets()); }
  /// Number of step() calls in a full episode.
  std::size_t episode_length() const { return days() - 1 - config_.window; }
  /// close(day) / close(day - 1); requires day >= 1.
  std::span<const double> relatives(std::size_t day) const;

 private:
  EnvConfig config_;
  Matrix relatives_;  // row 0 unused (ones)
  std::vector<double> market_vector_;
  EnvState state_;
};

}  // namespace triad
