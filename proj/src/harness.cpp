#include "triad/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "triad/error.hpp"
#include "triad/solver.hpp"

namespace triad {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Observe: return "observe";
    case Stage::Reward: return "reward";
    case Stage::StoreD: return "store_d";
    case Stage::StoreM: return "store_m";
    case Stage::Observer: return "observer";
    case Stage::Rl: return "rl";
    case Stage::Solver: return "solver";
    case Stage::Compose: return "compose";
    case Stage::Execute: return "execute";
    case Stage::UpdateRl: return "update_rl";
    case Stage::UpdateObserver: return "update_observer";
  }
  return "?";
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::size_t kProfileCapacity = 20000;

Matrix day_covariance(const ReturnsMatrix& returns, std::size_t t, std::size_t k) {
  return rolling_covariance(returns, t, std::min(k, t - 1)).matrix;
}

struct PassContext {
  const RunConfig* cfg = nullptr;
  Tier tier = Tier::Triple;
  const Td3Agent* agent = nullptr;
  Td3Agent* learner = nullptr;  // set only while training
  MarketObserver* observer = nullptr;
  double base_risk = 0.0;
  ReplayBuffer* buffer = nullptr;
  std::vector<ObserverRecord>* profile = nullptr;
  std::mt19937_64* explore = nullptr;
  CallCounters* counters = nullptr;
  const TraceHook* hook = nullptr;
  std::uint64_t solver_seed = 0;
};

void emit(const PassContext& c, Stage s, std::size_t day) {
  if (c.hook && c.hook->on_stage) c.hook->on_stage(s, day);
}

/// One pass over the environment: observe, store, decide, execute, update.
EpisodeTrace run_pass(TradingEnv& env, const ReturnsMatrix& returns, PassContext& c) {
  const RunConfig& cfg = *c.cfg;
  const bool learn = c.learner != nullptr;
  const std::size_t n = env.assets();
  EpisodeTrace tr;
  const std::size_t steps = env.episode_length();
  for (auto* v : {&tr.equity, &tr.growth, &tr.jsd, &tr.risk, &tr.ctrl}) v->reserve(steps);

  Observation o_prev = env.reset();
  if (c.observer) c.observer->begin_episode(o_prev);
  WeightVector a_rl = WeightVector::uniform(n);
  WeightVector a_final = a_rl;
  double sigma_prev = c.tier == Tier::Single ? 0.0 : c.base_risk;
  std::vector<double> vm_prev(kMarketVectorSize, 0.0);

  auto execute = [&](double ctrl_l1) {
    const std::size_t day = env.state().day;
    const double risk = strategy_risk(a_final.values(), day_covariance(returns, day, cfg.risk.k), cfg.risk.form);
    StepResult r = env.step(a_final);
    ++c.counters->execute;
    emit(c, Stage::Execute, day);
    tr.equity.push_back(env.state().capital);
    tr.growth.push_back(r.growth);
    tr.jsd.push_back(jensen_shannon(a_rl, a_final));
    tr.risk.push_back(risk);
    tr.ctrl.push_back(ctrl_l1);
    return r;
  };

  StepResult r = execute(0.0);
  while (true) {
    const Observation o_t = r.o_next;
    emit(c, Stage::Observe, o_t.day);
    if (learn) {
      const double reward = per_step_reward(r.growth, a_rl, a_final, cfg.reward);
      emit(c, Stage::Reward, o_t.day);
      Transition tn{o_prev, a_final, a_rl, o_t, reward};
      if (c.hook && c.hook->on_store_d) c.hook->on_store_d(tn);
      c.buffer->push(std::move(tn));
      emit(c, Stage::StoreD, o_t.day);
      if (c.observer) {
        ObserverRecord rec{o_prev, o_t, sigma_prev, vm_prev};
        if (c.hook && c.hook->on_store_m) c.hook->on_store_m(rec);
        if (c.profile->size() >= kProfileCapacity) c.profile->erase(c.profile->begin());
        c.profile->push_back(std::move(rec));
        emit(c, Stage::StoreM, o_t.day);
      }
    }
    if (r.done) break;

    const std::size_t day = o_t.day;
    double sigma_s = c.tier == Tier::Single ? 0.0 : c.base_risk;
    std::vector<double> vm(kMarketVectorSize, 0.0);
    if (c.tier == Tier::Triple) {
      RiskSignal s = c.observer->observe(o_t);
      ++c.counters->observer;
      emit(c, Stage::Observer, day);
      sigma_s = s.sigma_s;
      vm = std::move(s.v_m);
      env.set_market_vector(vm);
    }

    a_rl = learn ? c.learner->select_action(o_t, true, *c.explore) : c.agent->select_action(o_t);
    ++c.counters->rl;
    emit(c, Stage::Rl, day);

    std::vector<double> a_ctrl(n, 0.0);
    if (c.tier != Tier::Single) {
      RiskControlProblem prob{a_rl, day_covariance(returns, day, cfg.risk.k), sigma_s, vm, cfg.solver.mu};
      SolverResult sr = propose_control(prob, cfg.solver.budget, splitmix(c.solver_seed ^ (day * 0x9E3779B97F4A7C15ULL)),
                                        cfg.solver);
      ++c.counters->solver;
      emit(c, Stage::Solver, day);
      a_ctrl = std::move(sr.a_ctrl);
    }

    std::vector<double> composed(n);
    double ctrl_l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      composed[i] = a_rl[i] + a_ctrl[i];
      ctrl_l1 += std::abs(a_ctrl[i]);
    }
    a_final = WeightVector::is_valid(composed) ? WeightVector(std::move(composed)) : simplex_repair(composed);
    emit(c, Stage::Compose, day);

    r = execute(ctrl_l1);

    if (learn && c.buffer->size() >= std::max(cfg.agent.warmup, cfg.agent.batch_size)) {
      for (std::size_t u = 0; u < cfg.agent.updates_per_step; ++u) {
        td3_update(*c.learner, *c.buffer, cfg.agent.batch_size);
        ++c.counters->rl_updates;
        emit(c, Stage::UpdateRl, day);
      }
    }
    o_prev = o_t;
    sigma_prev = sigma_s;
    vm_prev = std::move(vm);
  }
  return tr;
}

PerformanceReport report_from_trace(const EpisodeTrace& tr, const RunConfig& cfg) {
  std::vector<double> curve;
  curve.reserve(tr.equity.size() + 1);
  curve.push_back(cfg.env.c0);
  curve.insert(curve.end(), tr.equity.begin(), tr.equity.end());
  std::vector<double> sigma_p(tr.risk.size());
  for (std::size_t i = 0; i < sigma_p.size(); ++i) sigma_p[i] = tr.risk[i] + cfg.metrics.sigma_beta;
  return make_report(std::move(curve), sigma_p, cfg.metrics);
}

std::unique_ptr<MarketObserver> make_observer(const RunConfig& cfg, std::size_t assets, double base_risk,
                                              const ReturnsMatrix& train_returns, std::size_t train_days,
                                              std::uint64_t seed) {
  if (cfg.tier != Tier::Triple) return nullptr;
  ObserverConfig oc = cfg.observer;
  const std::size_t w = cfg.env.window;
  if (oc.kind == "dc") {
    oc.lookback = std::min(oc.lookback, w + 1);
    return std::make_unique<DcObserver>(oc, w, assets, base_risk, cfg.risk.form);
  }
  const double ew_vol = calibrate_ew_volatility(train_returns, w, train_days - 1, w);
  const double scale = ew_vol > 0.0 ? oc.scale * base_risk / ew_vol : oc.scale;
  return std::make_unique<MlpObserver>(oc, w, assets, scale, splitmix(seed ^ 0x6F62736572766572ULL));
}

double validation_score(const EpisodeTrace& tr, const RunConfig& cfg) {
  if (cfg.selection == SelectionMetric::Sharpe) return report_from_trace(tr, cfg).sharpe;
  return episode_reward(tr.growth, tr.jsd, cfg.env.c0, cfg.reward).j;
}

}  // namespace

Splits split_series(const OhlcvSeries& series, const SplitConfig& split, std::size_t window) {
  const std::size_t t = series.days();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(t) * split.train));
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(t) * split.validation));
  if (n_train + n_val >= t) throw Error(Errc::DataSplitTooSmall, "test split is empty");
  const std::size_t n_test = t - n_train - n_val;
  for (std::size_t len : {n_train, n_val, n_test}) {
    if (len <= window + 1) {
      throw Error(Errc::DataSplitTooSmall,
                  "a split has " + std::to_string(len) + " days; need more than " + std::to_string(window + 1));
    }
  }
  Splits s;
  s.train_end = n_train;
  s.validation_end = n_train + n_val;
  s.train = series.slice(0, s.train_end);
  s.validation = series.slice(s.train_end, s.validation_end);
  s.test = series.slice(s.validation_end, t);
  return s;
}

std::uint64_t splits_hash(const Splits& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const OhlcvSeries* seg : {&s.train, &s.validation, &s.test}) {
    for (double v : seg->close.data()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Policy::Policy(const Policy& o)
    : config(o.config), tier(o.tier), seed(o.seed), base_risk(o.base_risk), agent(o.agent),
      observer(o.observer ? o.observer->clone() : nullptr) {}

Policy& Policy::operator=(const Policy& o) {
  if (this != &o) {
    Policy tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

TrainResult train(const RunConfig& cfg, const Splits& splits, std::uint64_t seed, const TraceHook* hook) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::size_t w = cfg.env.window;
  const std::size_t n = splits.train.assets();
  const ReturnsMatrix train_ret = daily_returns(splits.train);
  const ReturnsMatrix val_ret = daily_returns(splits.validation);

  TrainResult out;
  Policy live;
  live.config = cfg;
  live.tier = cfg.tier;
  live.seed = seed;
  if (cfg.tier != Tier::Single) {
    live.base_risk = calibrate_base_risk(train_ret, w, splits.train.days() - 1, cfg.risk.k,
                                         cfg.observer.base_risk_quantile, cfg.risk.form);
  }
  live.observer = make_observer(cfg, n, live.base_risk, train_ret, splits.train.days(), seed);
  live.agent = Td3Agent(observation_size(w, n), n, cfg.agent, seed);

  ReplayBuffer buffer(cfg.agent.buffer_capacity);
  std::vector<ObserverRecord> profile;
  std::mt19937_64 explore(splitmix(seed ^ 0x6578706C6F726521ULL));
  TradingEnv env(splits.train, cfg.env);
  TradingEnv val_env(splits.validation, cfg.env);

  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t ep = 1; ep <= cfg.max_episode; ++ep) {
    PassContext ctx;
    ctx.cfg = &cfg;
    ctx.tier = cfg.tier;
    ctx.agent = &live.agent;
    ctx.learner = &live.agent;
    ctx.observer = live.observer.get();
    ctx.base_risk = live.base_risk;
    ctx.buffer = &buffer;
    ctx.profile = &profile;
    ctx.explore = &explore;
    ctx.counters = &out.counters;
    ctx.hook = hook;
    ctx.solver_seed = splitmix(seed + ep);
    const EpisodeTrace tr = run_pass(env, train_ret, ctx);

    if (live.observer && !profile.empty()) {
      live.observer->update_profile(profile);
      ++out.counters.observer_updates;
      if (hook && hook->on_stage) hook->on_stage(Stage::UpdateObserver, env.state().day);
    }

    CallCounters val_counters;
    auto val_observer = live.observer ? live.observer->clone() : nullptr;
    PassContext vctx;
    vctx.cfg = &cfg;
    vctx.tier = cfg.tier;
    vctx.agent = &live.agent;
    vctx.observer = val_observer.get();
    vctx.base_risk = live.base_risk;
    vctx.counters = &val_counters;
    vctx.solver_seed = splitmix(seed ^ 0x76616C6964617465ULL);
    const EpisodeTrace vtr = run_pass(val_env, val_ret, vctx);

    EpisodeStats st;
    st.episode = ep;
    st.train_j = episode_reward(tr.growth, tr.jsd, cfg.env.c0, cfg.reward).j;
    st.validation_score = validation_score(vtr, cfg);
    st.final_capital = tr.equity.empty() ? cfg.env.c0 : tr.equity.back();
    out.curve.push_back(st);
    spdlog::debug("seed {} episode {}: train J {:.6f}, validation {:.6f}", seed, ep, st.train_j,
                  st.validation_score);
    if (st.validation_score > best_score || ep == 1) {
      best_score = st.validation_score;
      out.best = live;
      out.best_episode = ep;
    }
  }
  out.transitions = buffer.size();
  out.profile_size = profile.size();
  spdlog::info("trained tier {} seed {} in {:.2f}s (best episode {})", to_string(cfg.tier), seed,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(),
               out.best_episode);
  return out;
}

TrainResult train(const RunConfig& cfg, std::uint64_t seed, const TraceHook* hook) {
  const OhlcvSeries series = load_data(cfg);
  return train(cfg, split_series(series, cfg.split, cfg.env.window), seed, hook);
}

BacktestResult backtest(const Policy& policy, const OhlcvSeries& segment) {
  const RunConfig& cfg = policy.config;
  if (segment.days() <= cfg.env.window + 1) throw Error(Errc::InsufficientData, "segment shorter than the warmup");
  if (segment.assets() != policy.agent.assets()) {
    throw Error(Errc::DimensionMismatch, "segment asset count differs from the policy");
  }
  BacktestResult res;
  const ReturnsMatrix ret = daily_returns(segment);
  TradingEnv env(segment, cfg.env);
  auto observer = policy.observer ? policy.observer->clone() : nullptr;
  PassContext ctx;
  ctx.cfg = &cfg;
  ctx.tier = policy.tier;
  ctx.agent = &policy.agent;
  ctx.observer = observer.get();
  ctx.base_risk = policy.base_risk;
  ctx.counters = &res.counters;
  ctx.solver_seed = splitmix(policy.seed ^ 0x6261636B74657374ULL);
  res.trace = run_pass(env, ret, ctx);
  res.report = report_from_trace(res.trace, cfg);
  return res;
}

BacktestResult backtest(Strategy& strategy, const OhlcvSeries& segment, const RunConfig& cfg) {
  if (segment.days() <= cfg.env.window + 1) throw Error(Errc::InsufficientData, "segment shorter than the warmup");
  BacktestResult res;
  const ReturnsMatrix ret = daily_returns(segment);
  TradingEnv env(segment, cfg.env);
  env.reset();
  strategy.reset(segment.assets());
  auto& tr = res.trace;
  while (!env.state().done) {
    const std::size_t day = env.state().day;
    const WeightVector w = strategy.decide(segment, day);
    const double risk = strategy_risk(w.values(), day_covariance(ret, day, cfg.risk.k), cfg.risk.form);
    const StepResult r = env.step(w);
    ++res.counters.execute;
    tr.equity.push_back(env.state().capital);
    tr.growth.push_back(r.growth);
    tr.jsd.push_back(0.0);
    tr.risk.push_back(risk);
    tr.ctrl.push_back(0.0);
  }
  res.report = report_from_trace(tr, cfg);
  return res;
}

std::optional<RunConfig> resolve_variant(const std::string& name, const RunConfig& base) {
  std::string stem = name;
  bool no_action = false;
  const std::string suffix = "-noaction";
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
    stem.resize(stem.size() - suffix.size());
    no_action = true;
  }
  RunConfig c = base;
  if (stem == "agent") {
  } else if (stem == "td3" || stem == "single") {
    c.tier = Tier::Single;
  } else if (stem == "dual") {
    c.tier = Tier::Dual;
  } else if (stem == "triple-dc" || stem == "triple-mlp") {
    c.tier = Tier::Triple;
    c.observer.kind = stem == "triple-dc" ? "dc" : "mlp";
    if (c.reward.lambda2 == 0.0) c.reward.lambda2 = RewardConfig{}.lambda2;
  } else {
    if (no_action) throw Error(Errc::InvalidConfig, "unknown strategy '" + name + "'");
    return std::nullopt;
  }
  if (no_action) c.reward.lambda2 = 0.0;
  return c;
}

namespace {

BacktestResult run_one(const RunConfig& cfg, const Splits& splits, const std::string& name, std::uint64_t seed) {
  if (auto variant = resolve_variant(name, cfg)) {
    const TrainResult tr = train(*variant, splits, seed);
    return backtest(tr.best, splits.test);
  }
  auto strategy = make_strategy(name, cfg.baselines);
  return backtest(*strategy, splits.test, cfg);
}

std::vector<double> seed_average(const std::vector<BacktestResult>& runs, std::vector<double> EpisodeTrace::*field) {
  std::vector<double> out((runs.front().trace.*field).size(), 0.0);
  for (const auto& r : runs)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (r.trace.*field)[i];
  for (double& v : out) v /= static_cast<double>(runs.size());
  return out;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ComparisonReport compare(const RunConfig& cfg, const std::vector<std::string>& strategies,
                         const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  if (strategies.size() < 2) throw Error(Errc::InvalidConfig, "compare needs at least two strategies");
  if (seeds.empty()) throw Error(Errc::InvalidConfig, "compare needs at least one seed");
  for (const auto& s : strategies) {
    if (!resolve_variant(s, cfg)) make_strategy(s, cfg.baselines);  // validates the name
  }
  const auto started = std::chrono::steady_clock::now();
  const OhlcvSeries series = load_data(cfg);
  const Splits splits = split_series(series, cfg.split, cfg.env.window);
  const std::string data_hash = hex64(splits_hash(splits));

  const std::size_t total = strategies.size() * seeds.size();
  std::vector<BacktestResult> results(total);
  for (std::size_t begin = 0; begin < total; begin += cfg.workers) {
    const std::size_t end = std::min(total, begin + cfg.workers);
    if (cfg.workers == 1) {
      results[begin] = run_one(cfg, splits, strategies[begin / seeds.size()], seeds[begin % seeds.size()]);
      continue;
    }
    std::vector<std::future<BacktestResult>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, run_one, std::cref(cfg), std::cref(splits),
                                std::cref(strategies[i / seeds.size()]), seeds[i % seeds.size()]));
    }
    for (std::size_t i = begin; i < end; ++i) results[i] = jobs[i - begin].get();
  }

  ComparisonReport rep;
  rep.config_hash = hex64(config_hash(cfg));
  rep.seeds = seeds;
  rep.backtests = total;
  rep.reference = std::find(strategies.begin(), strategies.end(), cfg.reference) != strategies.end()
                      ? cfg.reference
                      : strategies.front();
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const std::vector<BacktestResult> runs(results.begin() + static_cast<std::ptrdiff_t>(s * seeds.size()),
                                           results.begin() + static_cast<std::ptrdiff_t>((s + 1) * seeds.size()));
    StrategyRow row;
    row.strategy = strategies[s];
    row.data_hash = data_hash;
    std::vector<double> ar, sr, vol;
    for (const auto& r : runs) {
      ar.push_back(r.report.annual_return);
      sr.push_back(r.report.sharpe);
      vol.push_back(r.report.long_term_vol);
      row.seed_mdd.push_back(r.report.mdd);
      row.seed_risk.push_back(r.report.mean_short_term_risk);
      row.seed_mean_returns.push_back(r.report.mean_daily_return);
    }
    row.ar = mean(ar);
    row.sharpe = mean(sr);
    row.vol = mean(vol);
    row.mdd = mean(row.seed_mdd);
    row.risk = mean(row.seed_risk);
    row.t_days = runs.front().trace.equity.size();
    row.equity = seed_average(runs, &EpisodeTrace::equity);
    row.risk_series = seed_average(runs, &EpisodeTrace::risk);
    row.ctrl_series = seed_average(runs, &EpisodeTrace::ctrl);
    rep.rows.push_back(std::move(row));
  }
  const auto ref = std::find_if(rep.rows.begin(), rep.rows.end(),
                                [&](const StrategyRow& r) { return r.strategy == rep.reference; });
  const std::vector<double> ref_sample = ref->seed_mean_returns;
  for (auto& row : rep.rows) {
    try {
      const RankSumResult w = wilcoxon_rank_sum(row.seed_mean_returns, ref_sample, 0.05);
      row.p_value = w.p_value;
      row.significant = w.significant;
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateSamples) throw;
      row.p_value = 1.0;
      row.significant = false;
    }
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const StrategyRow& a, const StrategyRow& b) {
    if (a.sharpe != b.sharpe) return a.sharpe > b.sharpe;
    return a.strategy < b.strategy;
  });
  spdlog::info("compare: {} backtests in {:.2f}s", total,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  return rep;
}

std::vector<std::string> ablation_variants() {
  return {"single", "dual", "triple-dc-noaction", "triple-dc", "triple-mlp-noaction", "triple-mlp"};
}

ComparisonReport ablate(const RunConfig& cfg) {
  RunConfig c = cfg;
  const auto variants = ablation_variants();
  if (std::find(variants.begin(), variants.end(), c.reference) == variants.end()) c.reference = "triple-dc";
  return compare(c, variants, c.seed_list());
}

}  // namespace triad
