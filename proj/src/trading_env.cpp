#include "triad/trading_env.hpp"

#include <cmath>

#include "triad/error.hpp"
#include "triad/simd.hpp"

namespace triad {

void EnvConfig::validate() const {
  if (window < 1) throw Error(Errc::InvalidConfig, "window must be >= 1");
  if (!(c_tx >= 0.0 && c_tx < 1.0)) throw Error(Errc::InvalidConfig, "c_tx must lie in [0, 1)");
  if (!(c0 > 0.0)) throw Error(Errc::InvalidConfig, "C0 must be positive");
}

WeightVector drifted_holdings(const WeightVector& holdings, std::span<const double> relatives) {
  if (holdings.size() != relatives.size()) {
    throw Error(Errc::DimensionMismatch, "holdings and relatives differ in length");
  }
  std::vector<double> out(holdings.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) total += (out[i] = holdings[i] * relatives[i]);
  for (double& v : out) v /= total;
  return WeightVector(std::move(out));
}

TradingEnv::TradingEnv(const OhlcvSeries& series, EnvConfig config)
    : config_(config), market_vector_(kMarketVectorSize, 0.0) {
  config_.validate();
  const std::size_t t_days = series.days();
  if (t_days <= config_.window + 1) {
    throw Error(Errc::SeriesTooShort, "series needs more than W + 1 days");
  }
  relatives_ = Matrix(t_days, series.assets(), 1.0);
  for (std::size_t t = 1; t < t_days; ++t)
    for (std::size_t i = 0; i < series.assets(); ++i)
      relatives_(t, i) = series.close(t, i) / series.close(t - 1, i);
}

std::span<const double> TradingEnv::relatives(std::size_t day) const {
  if (day < 1 || day >= days()) throw Error(Errc::IndexOutOfRange, "no relatives for that day");
  return relatives_.row(day);
}

Observation TradingEnv::reset() {
  state_.capital = config_.c0;
  state_.holdings = WeightVector::uniform(assets());
  state_.day = config_.window;
  state_.done = false;
  state_.cost_paid = 0.0;
  market_vector_.assign(kMarketVectorSize, 0.0);
  return observe();
}

void TradingEnv::set_market_vector(std::span<const double> v_m) {
  if (v_m.size() != kMarketVectorSize) throw Error(Errc::DimensionMismatch, "market vector must have 3 features");
  market_vector_.assign(v_m.begin(), v_m.end());
}

Observation TradingEnv::observe() const {
  Observation o;
  o.day = state_.day;
  o.features.reserve(observation_size());
  for (std::size_t d = state_.day + 1 - config_.window; d <= state_.day; ++d) {
    const auto rel = relatives_.row(d);
    o.features.insert(o.features.end(), rel.begin(), rel.end());
  }
  o.features.insert(o.features.end(), state_.holdings.begin(), state_.holdings.end());
  o.features.insert(o.features.end(), market_vector_.begin(), market_vector_.end());
  return o;
}

StepResult TradingEnv::step(const WeightVector& a_final) {
  if (state_.done) throw Error(Errc::EpisodeFinished, "step() after the episode ended");
  if (a_final.size() != assets() || !WeightVector::is_valid(a_final.values())) {
    throw Error(Errc::InvalidAction, "action is not a simplex point of the right size");
  }
  double turnover = 0.0;
  for (std::size_t i = 0; i < assets(); ++i) turnover += std::abs(a_final[i] - state_.holdings[i]);
  const double cost = config_.c_tx * 0.5 * turnover;

  const auto rel = relatives_.row(state_.day + 1);
  const double growth = (1.0 - cost) * simd::dot(a_final.values(), rel);
  state_.cost_paid += state_.capital * cost;
  state_.capital *= growth;
  state_.holdings = drifted_holdings(a_final, rel);
  ++state_.day;
  state_.done = state_.day + 1 >= days();

  StepResult r;
  r.o_next = observe();
  r.growth = growth;
  r.done = state_.done;
  return r;
}

}  // namespace triad
