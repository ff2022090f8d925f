#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "triad/market_data.hpp"
#include "triad/metrics.hpp"
#include "triad/nn.hpp"
#include "triad/observation.hpp"

namespace triad {

/// Element of the observer memory: (o_{t-1}, o_t, sigma_s at t-1, v_m at t-1).
struct ObserverRecord {
  Observation o_prev;
  Observation o_next;
  double sigma_s_prev = 0.0;
  std::vector<double> v_m_prev;
};

struct RiskSignal {
  double sigma_s = 0.0;
  std::vector<double> v_m = std::vector<double>(kMarketVectorSize, 0.0);

  double trend() const { return v_m[0]; }
};

enum class DcKind { Upturn, Downturn };

struct DcEvent {
  DcKind kind = DcKind::Upturn;
  std::size_t confirm_index = 0;
  std::size_t extreme_index = 0;  // the extreme the move was measured from
  double magnitude = 0.0;         // |p_confirm / p_extreme - 1|
};

/// Directional-change events over an index-level series.
std::vector<DcEvent> dc_detect(std::span<const double> prices, double theta);

struct ObserverConfig {
  std::string kind = "dc";  // "dc" | "mlp" | "none"
  double theta = 0.005;
  double base_risk_quantile = 0.5;
  double scale = 1.0;
  std::size_t lookback = 10;  // minimum index history for a DC signal
  std::size_t history = 63;   // trailing index levels / records kept
  double up_factor = 1.5;
  double down_factor = 0.5;
  std::size_t mlp_hidden = 16;
  double mlp_learning_rate = 1e-3;
  std::size_t mlp_batch = 32;

  void validate() const;
};

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

/// DC signal from index levels (oldest first): trend of the latest event,
/// intensity = events / (len - 1), vol ratio = last-lookback / full-window
/// realized volatility of index log returns.
RiskSignal observe_dc(std::span<const double> index_levels, const ObserverConfig& cfg, double base_risk);

/// MLP signal: features are window returns of the equal-weight portfolio in
/// percent; the net predicts next-window realized volatility in the same units.
RiskSignal observe_mlp(const nn::DenseNet& net, std::span<const double> features, double scale);

/// Sample std (percent) of the equal-weight returns held in a feature vector.
double realized_volatility(std::span<const double> ew_returns_pct);

/// Equal-weight daily returns (percent) over an observation's relative window.
std::vector<double> equal_weight_returns_pct(const Observation& o, std::size_t window, std::size_t assets);

/// Risk of uniform weights under the W-day covariance of an observation's window.
double window_uniform_risk(const Observation& o, std::size_t window, std::size_t assets, RiskForm form);

/// Quantile of uniform-weight sigma_alpha over days [first, last] of a returns panel.
double calibrate_base_risk(const ReturnsMatrix& returns, std::size_t first, std::size_t last, std::size_t k,
                           double q, RiskForm form);

/// Median realized EW volatility (percent) over rolling windows ending in [first, last].
double calibrate_ew_volatility(const ReturnsMatrix& returns, std::size_t first, std::size_t last,
                               std::size_t window);

struct MlpSample {
  std::vector<double> features;
  double target = 0.0;
};

class MarketObserver {
 public:
  virtual ~MarketObserver() = default;

  virtual std::string kind() const = 0;
  /// Start of an episode; `o0` is the reset observation.
  virtual void begin_episode(const Observation& o0) = 0;
  virtual RiskSignal observe(const Observation& o) = 0;
  /// Learn from the history profile. Throws EmptyBatch on no records.
  virtual void update_profile(std::span<const ObserverRecord> records) = 0;
  virtual std::string to_json() const = 0;
  virtual std::unique_ptr<MarketObserver> clone() const = 0;
};

class DcObserver final : public MarketObserver {
 public:
  DcObserver(ObserverConfig cfg, std::size_t window, std::size_t assets, double base_risk,
             RiskForm form = RiskForm::NormOfProduct);

  std::string kind() const override { return "dc"; }
  void begin_episode(const Observation& o0) override;
  RiskSignal observe(const Observation& o) override;
  /// base_risk <- quantile of realized uniform-weight sigma_alpha of each o_next
  /// over the trailing `history` records.
  void update_profile(std::span<const ObserverRecord> records) override;
  std::string to_json() const override;
  std::unique_ptr<MarketObserver> clone() const override { return std::make_unique<DcObserver>(*this); }

  double base_risk() const noexcept { return base_risk_; }
  const std::vector<double>& index_levels() const noexcept { return levels_; }
  const ObserverConfig& config() const noexcept { return cfg_; }

 private:
  void append_day(const Observation& o);

  ObserverConfig cfg_;
  std::size_t window_;
  std::size_t assets_;
  double base_risk_;
  RiskForm form_;
  std::vector<double> levels_;
  std::size_t last_day_ = 0;
};

class MlpObserver final : public MarketObserver {
 public:
  MlpObserver(ObserverConfig cfg, std::size_t window, std::size_t assets, double scale, std::uint64_t seed);
  MlpObserver(ObserverConfig cfg, std::size_t window, std::size_t assets, double scale, nn::DenseNet net);

  std::string kind() const override { return "mlp"; }
  void begin_episode(const Observation&) override {}
  RiskSignal observe(const Observation& o) override;
  /// One supervised epoch on next-window realized volatility targets built
  /// from time-consecutive records.
  void update_profile(std::span<const ObserverRecord> records) override;
  std::string to_json() const override;
  std::unique_ptr<MarketObserver> clone() const override { return std::make_unique<MlpObserver>(*this); }

  double scale() const noexcept { return scale_; }
  const nn::DenseNet& net() const noexcept { return net_; }

  /// Supervised pairs from records; pairs need records W steps apart.
  std::vector<MlpSample> make_samples(std::span<const ObserverRecord> records) const;
  /// One shuffled minibatch epoch; returns the mean MSE after the epoch.
  double train_epoch(std::span<const MlpSample> samples);
  double loss(std::span<const MlpSample> samples) const;

 private:
  ObserverConfig cfg_;
  std::size_t window_;
  std::size_t assets_;
  double scale_;
  nn::DenseNet net_;
  nn::AdamState adam_;
  std::mt19937_64 rng_;
};

std::string observer_config_to_json(const ObserverConfig& cfg);
ObserverConfig observer_config_from_json(const std::string& text);

std::unique_ptr<MarketObserver> observer_from_json(const std::string& text);

}  // namespace triad
