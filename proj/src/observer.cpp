#include "triad/observer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "triad/error.hpp"
#include "triad/trading_env.hpp"

namespace triad {

using nlohmann::json;

namespace {

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double mean_relative(const Observation& o, std::size_t day, std::size_t assets) {
  double s = 0.0;
  for (std::size_t i = 0; i < assets; ++i) s += o.features[day * assets + i];
  return s / static_cast<double>(assets);
}

void check_observation(const Observation& o, std::size_t window, std::size_t assets) {
  if (o.features.size() != observation_size(window, assets)) {
    throw Error(Errc::DimensionMismatch, "observation length does not match observer shape");
  }
}

}  // namespace

void ObserverConfig::validate() const {
  if (kind != "dc" && kind != "mlp" && kind != "none") {
    throw Error(Errc::InvalidConfig, "observer must be dc, mlp or none");
  }
  if (!(theta > 0.0 && theta < 1.0)) throw Error(Errc::InvalidConfig, "theta must lie in (0, 1)");
  if (!(base_risk_quantile >= 0.0 && base_risk_quantile <= 1.0)) {
    throw Error(Errc::InvalidConfig, "base_risk_quantile must lie in [0, 1]");
  }
  if (!(scale > 0.0)) throw Error(Errc::InvalidConfig, "observer scale must be positive");
  if (lookback < 2 || history < lookback) throw Error(Errc::InvalidConfig, "need 2 <= lookback <= history");
  if (!(up_factor >= 1.0) || !(down_factor > 0.0 && down_factor <= 1.0)) {
    throw Error(Errc::InvalidConfig, "boundary factors must satisfy down <= 1 <= up");
  }
  if (mlp_hidden < 1 || mlp_batch < 1 || !(mlp_learning_rate > 0.0)) {
    throw Error(Errc::InvalidConfig, "bad mlp observer settings");
  }
}

std::vector<DcEvent> dc_detect(std::span<const double> prices, double theta) {
  std::vector<DcEvent> events;
  if (prices.empty()) return events;
  enum class Mode { None, Up, Down } mode = Mode::None;
  std::size_t hi = 0, lo = 0;
  for (std::size_t i = 1; i < prices.size(); ++i) {
    const double p = prices[i];
    const bool up_confirm = mode != Mode::Up && p >= prices[lo] * (1.0 + theta);
    const bool down_confirm = mode != Mode::Down && p <= prices[hi] * (1.0 - theta);
    if (up_confirm) {
      events.push_back({DcKind::Upturn, i, lo, p / prices[lo] - 1.0});
      mode = Mode::Up;
      hi = i;
    } else if (down_confirm) {
      events.push_back({DcKind::Downturn, i, hi, 1.0 - p / prices[hi]});
      mode = Mode::Down;
      lo = i;
    } else {
      if (mode != Mode::Down && p > prices[hi]) hi = i;
      if (mode != Mode::Up && p < prices[lo]) lo = i;
    }
  }
  return events;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::InsufficientData, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

RiskSignal observe_dc(std::span<const double> index_levels, const ObserverConfig& cfg, double base_risk) {
  if (index_levels.size() < cfg.lookback) {
    throw Error(Errc::InsufficientHistory, "index history shorter than the lookback");
  }
  const std::size_t len = std::min(index_levels.size(), cfg.history + 1);
  const auto levels = index_levels.subspan(index_levels.size() - len);
  const auto events = dc_detect(levels, cfg.theta);

  RiskSignal s;
  double factor = 1.0;
  if (!events.empty()) {
    if (events.back().kind == DcKind::Upturn) {
      s.v_m[0] = 1.0;
      factor = cfg.up_factor;
    } else {
      s.v_m[0] = -1.0;
      factor = cfg.down_factor;
    }
  }
  s.v_m[1] = static_cast<double>(events.size()) / static_cast<double>(len - 1);

  std::vector<double> log_ret(len - 1);
  for (std::size_t i = 1; i < len; ++i) log_ret[i - 1] = std::log(levels[i] / levels[i - 1]);
  const double long_vol = sample_std(log_ret);
  const std::size_t short_n = std::min(cfg.lookback, log_ret.size());
  const double short_vol = sample_std(std::span<const double>(log_ret).last(short_n));
  s.v_m[2] = long_vol > 0.0 ? short_vol / long_vol : 1.0;
  s.sigma_s = std::max(0.0, base_risk * factor);
  return s;
}

double realized_volatility(std::span<const double> ew_returns_pct) { return sample_std(ew_returns_pct); }

RiskSignal observe_mlp(const nn::DenseNet& net, std::span<const double> features, double scale) {
  if (features.size() != net.input_size() || net.output_size() != 1) {
    throw Error(Errc::DimensionMismatch, "features do not match the observer net");
  }
  const double pred = nn::predict(net, features)[0];
  const double realized = realized_volatility(features);
  RiskSignal s;
  s.sigma_s = std::max(0.0, pred) * scale;
  s.v_m[0] = pred > realized ? 1.0 : (pred < realized ? -1.0 : 0.0);
  s.v_m[1] = pred;
  s.v_m[2] = pred > 0.0 ? realized / pred : 1.0;
  return s;
}

std::vector<double> equal_weight_returns_pct(const Observation& o, std::size_t window, std::size_t assets) {
  check_observation(o, window, assets);
  std::vector<double> out(window);
  for (std::size_t d = 0; d < window; ++d) out[d] = (mean_relative(o, d, assets) - 1.0) * 100.0;
  return out;
}

double window_uniform_risk(const Observation& o, std::size_t window, std::size_t assets, RiskForm form) {
  check_observation(o, window, assets);
  if (window < 2) return 0.0;
  std::vector<double> mean(assets, 0.0);
  for (std::size_t d = 0; d < window; ++d)
    for (std::size_t i = 0; i < assets; ++i) mean[i] += o.features[d * assets + i] - 1.0;
  for (double& m : mean) m /= static_cast<double>(window);
  Matrix cov(assets, assets);
  for (std::size_t d = 0; d < window; ++d)
    for (std::size_t i = 0; i < assets; ++i)
      for (std::size_t j = 0; j < assets; ++j)
        cov(i, j) += (o.features[d * assets + i] - 1.0 - mean[i]) * (o.features[d * assets + j] - 1.0 - mean[j]);
  for (double& v : cov.data()) v /= static_cast<double>(window - 1);
  const std::vector<double> uniform(assets, 1.0 / static_cast<double>(assets));
  return strategy_risk(uniform, cov, form);
}

double calibrate_base_risk(const ReturnsMatrix& returns, std::size_t first, std::size_t last, std::size_t k,
                           double q, RiskForm form) {
  const std::size_t n = returns.values.cols();
  const WeightVector uniform = WeightVector::uniform(n);
  std::vector<double> risks;
  for (std::size_t t = std::max(first, k + 1); t <= last && t <= returns.values.rows(); ++t) {
    risks.push_back(strategy_risk(uniform.values(), rolling_covariance(returns, t, k).matrix, form));
  }
  if (risks.empty()) throw Error(Errc::InsufficientData, "no day available to calibrate base risk");
  return quantile(std::move(risks), q);
}

double calibrate_ew_volatility(const ReturnsMatrix& returns, std::size_t first, std::size_t last,
                               std::size_t window) {
  const std::size_t n = returns.values.cols();
  std::vector<double> vols;
  std::vector<double> ew(window);
  for (std::size_t t = std::max(first, window); t <= last && t <= returns.values.rows(); ++t) {
    for (std::size_t d = 0; d < window; ++d) {
      const auto row = returns.values.row(t - window + d);
      ew[d] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n) * 100.0;
    }
    vols.push_back(sample_std(ew));
  }
  if (vols.empty()) throw Error(Errc::InsufficientData, "no day available to calibrate volatility");
  return quantile(std::move(vols), 0.5);
}

// ---------------------------------------------------------------- DC

DcObserver::DcObserver(ObserverConfig cfg, std::size_t window, std::size_t assets, double base_risk,
                       RiskForm form)
    : cfg_(std::move(cfg)), window_(window), assets_(assets), base_risk_(base_risk), form_(form) {
  cfg_.validate();
  if (!(base_risk >= 0.0) || !std::isfinite(base_risk)) {
    throw Error(Errc::InvalidConfig, "base risk must be finite and non-negative");
  }
}

void DcObserver::begin_episode(const Observation& o0) {
  check_observation(o0, window_, assets_);
  levels_.assign(1, 1.0);
  for (std::size_t d = 0; d < window_; ++d) levels_.push_back(levels_.back() * mean_relative(o0, d, assets_));
  last_day_ = o0.day;
}

void DcObserver::append_day(const Observation& o) {
  if (levels_.empty() || o.day < last_day_ || o.day > last_day_ + 1) {
    begin_episode(o);
    return;
  }
  if (o.day == last_day_ + 1) {
    levels_.push_back(levels_.back() * mean_relative(o, window_ - 1, assets_));
    last_day_ = o.day;
    if (levels_.size() > cfg_.history + 1) levels_.erase(levels_.begin());
  }
}

RiskSignal DcObserver::observe(const Observation& o) {
  check_observation(o, window_, assets_);
  append_day(o);
  return observe_dc(levels_, cfg_, base_risk_);
}

void DcObserver::update_profile(std::span<const ObserverRecord> records) {
  if (records.empty()) throw Error(Errc::EmptyBatch, "no observer records");
  if (window_ < 2) return;
  const std::size_t take = std::min(records.size(), cfg_.history);
  std::vector<double> risks;
  risks.reserve(take);
  for (const auto& r : records.last(take)) risks.push_back(window_uniform_risk(r.o_next, window_, assets_, form_));
  base_risk_ = quantile(std::move(risks), cfg_.base_risk_quantile);
}

std::string DcObserver::to_json() const {
  json j;
  j["kind"] = "dc";
  j["config"] = json::parse(observer_config_to_json(cfg_));
  j["window"] = window_;
  j["assets"] = assets_;
  j["base_risk"] = base_risk_;
  j["risk_form"] = to_string(form_);
  return j.dump();
}

// ---------------------------------------------------------------- MLP

MlpObserver::MlpObserver(ObserverConfig cfg, std::size_t window, std::size_t assets, double scale,
                         std::uint64_t seed)
    : cfg_(std::move(cfg)), window_(window), assets_(assets), scale_(scale), rng_(seed) {
  cfg_.validate();
  net_ = nn::DenseNet({window_, cfg_.mlp_hidden, 1}, {nn::Activation::Tanh, nn::Activation::Linear});
  net_.initialize(rng_);
  adam_ = nn::AdamState(net_.parameter_count(), {cfg_.mlp_learning_rate});
}

MlpObserver::MlpObserver(ObserverConfig cfg, std::size_t window, std::size_t assets, double scale,
                         nn::DenseNet net)
    : cfg_(std::move(cfg)), window_(window), assets_(assets), scale_(scale), net_(std::move(net)), rng_(0) {
  cfg_.validate();
  if (net_.input_size() != window_ || net_.output_size() != 1) {
    throw Error(Errc::DimensionMismatch, "observer net must map W inputs to one output");
  }
  adam_ = nn::AdamState(net_.parameter_count(), {cfg_.mlp_learning_rate});
}

RiskSignal MlpObserver::observe(const Observation& o) {
  return observe_mlp(net_, equal_weight_returns_pct(o, window_, assets_), scale_);
}

std::vector<MlpSample> MlpObserver::make_samples(std::span<const ObserverRecord> records) const {
  std::vector<MlpSample> out;
  for (std::size_t j = 0; j + window_ - 1 < records.size(); ++j) {
    const auto& ahead = records[j + window_ - 1];
    if (ahead.o_next.day != records[j].o_prev.day + window_) continue;
    out.push_back({equal_weight_returns_pct(records[j].o_prev, window_, assets_),
                   realized_volatility(equal_weight_returns_pct(ahead.o_next, window_, assets_))});
  }
  return out;
}

double MlpObserver::loss(std::span<const MlpSample> samples) const {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) {
    const double e = nn::predict(net_, s.features)[0] - s.target;
    total += e * e;
  }
  return total / static_cast<double>(samples.size());
}

double MlpObserver::train_epoch(std::span<const MlpSample> samples) {
  if (samples.empty()) throw Error(Errc::EmptyBatch, "no training samples");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<double> grad(net_.parameter_count());
  for (std::size_t start = 0; start < order.size(); start += cfg_.mlp_batch) {
    const std::size_t end = std::min(order.size(), start + cfg_.mlp_batch);
    const double inv = 1.0 / static_cast<double>(end - start);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t b = start; b < end; ++b) {
      const auto& s = samples[order[b]];
      auto fw = nn::forward(net_, s.features);
      const double g = 2.0 * (fw.output[0] - s.target) * inv;
      nn::backward_accumulate(net_, fw.tape, std::span<const double>(&g, 1), grad, nullptr);
    }
    nn::adam_step(adam_, net_.mutable_parameters(), grad);
  }
  return loss(samples);
}

void MlpObserver::update_profile(std::span<const ObserverRecord> records) {
  if (records.empty()) throw Error(Errc::EmptyBatch, "no observer records");
  const auto samples = make_samples(records);
  if (!samples.empty()) train_epoch(samples);
}

std::string MlpObserver::to_json() const {
  json j;
  j["kind"] = "mlp";
  j["config"] = json::parse(observer_config_to_json(cfg_));
  j["window"] = window_;
  j["assets"] = assets_;
  j["scale"] = scale_;
  j["net"] = json::parse(nn::to_json(net_));
  return j.dump();
}

// ---------------------------------------------------------------- serialization

std::string observer_config_to_json(const ObserverConfig& c) {
  json j = {{"kind", c.kind},
            {"theta", c.theta},
            {"base_risk_quantile", c.base_risk_quantile},
            {"scale", c.scale},
            {"lookback", c.lookback},
            {"history", c.history},
            {"up_factor", c.up_factor},
            {"down_factor", c.down_factor},
            {"mlp_hidden", c.mlp_hidden},
            {"mlp_learning_rate", c.mlp_learning_rate},
            {"mlp_batch", c.mlp_batch}};
  return j.dump();
}

ObserverConfig observer_config_from_json(const std::string& text) {
  ObserverConfig c;
  try {
    const json j = json::parse(text);
    c.kind = j.value("kind", c.kind);
    c.theta = j.value("theta", c.theta);
    c.base_risk_quantile = j.value("base_risk_quantile", c.base_risk_quantile);
    c.scale = j.value("scale", c.scale);
    c.lookback = j.value("lookback", c.lookback);
    c.history = j.value("history", c.history);
    c.up_factor = j.value("up_factor", c.up_factor);
    c.down_factor = j.value("down_factor", c.down_factor);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.mlp_learning_rate = j.value("mlp_learning_rate", c.mlp_learning_rate);
    c.mlp_batch = j.value("mlp_batch", c.mlp_batch);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("observer config: ") + e.what());
  }
  c.validate();
  return c;
}

std::unique_ptr<MarketObserver> observer_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto kind = j.at("kind").get<std::string>();
    const auto cfg = observer_config_from_json(j.at("config").dump());
    const auto window = j.at("window").get<std::size_t>();
    const auto assets = j.at("assets").get<std::size_t>();
    if (kind == "dc") {
      return std::make_unique<DcObserver>(cfg, window, assets, j.at("base_risk").get<double>(),
                                          risk_form_from_string(j.at("risk_form").get<std::string>()));
    }
    if (kind == "mlp") {
      return std::make_unique<MlpObserver>(cfg, window, assets, j.at("scale").get<double>(),
                                           nn::from_json(j.at("net").dump()));
    }
    throw Error(Errc::BadCheckpoint, "unknown observer kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(Errc::BadCheckpoint, std::string("observer archive: ") + e.what());
  }
}

}  // namespace triad
