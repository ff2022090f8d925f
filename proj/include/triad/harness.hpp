#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "triad/baselines.hpp"
#include "triad/config.hpp"
#include "triad/metrics.hpp"
#include "triad/observer.hpp"
#include "triad/rl_agent.hpp"
#include "triad/trading_env.hpp"

namespace triad {

/// Steps of one training-loop iteration, in execution order.
enum class Stage { Observe, Reward, StoreD, StoreM, Observer, Rl, Solver, Compose, Execute, UpdateRl, UpdateObserver };

std::string to_string(Stage s);

struct CallCounters {
  std::size_t observer = 0;
  std::size_t rl = 0;
  std::size_t solver = 0;
  std::size_t execute = 0;
  std::size_t rl_updates = 0;
  std::size_t observer_updates = 0;

  bool operator==(const CallCounters&) const = default;
};

/// Optional instrumentation for the training loop.
struct TraceHook {
  std::function<void(Stage, std::size_t day)> on_stage;
  std::function<void(const Transition&)> on_store_d;
  std::function<void(const ObserverRecord&)> on_store_m;
};

struct Splits {
  OhlcvSeries train;
  OhlcvSeries validation;
  OhlcvSeries test;
  std::size_t train_end = 0;       // first validation day in the source series
  std::size_t validation_end = 0;  // first test day
};

/// Chronological, non-overlapping partition; each segment needs more than W + 1 days.
Splits split_series(const OhlcvSeries& series, const SplitConfig& split, std::size_t window);

/// FNV-1a over the close prices of the three segments.
std::uint64_t splits_hash(const Splits& s);

/// A trained policy: the RL agent plus what the solver and observer need.
struct Policy {
  RunConfig config;
  Tier tier = Tier::Triple;
  std::uint64_t seed = 0;
  double base_risk = 0.0;
  Td3Agent agent;
  std::unique_ptr<MarketObserver> observer;  // null below the triple tier

  Policy() = default;
  Policy(const Policy& other);
  Policy& operator=(const Policy& other);
  Policy(Policy&&) noexcept = default;
  Policy& operator=(Policy&&) noexcept = default;
};

void write_policy(std::ostream& out, const Policy& policy);
Policy read_policy(std::istream& in);
void save_policy(const std::filesystem::path& path, const Policy& policy);
Policy load_policy(const std::filesystem::path& path);

/// Per-step series of one pass over a segment.
struct EpisodeTrace {
  std::vector<double> equity;  // capital after each step
  std::vector<double> growth;
  std::vector<double> jsd;     // D_JS(a_rl || a_final)
  std::vector<double> risk;    // sigma_alpha of the executed weights
  std::vector<double> ctrl;    // sum |a_ctrl|
};

struct EpisodeStats {
  std::size_t episode = 0;
  double train_j = 0.0;
  double validation_score = 0.0;
  double final_capital = 0.0;
};

struct TrainResult {
  Policy best;
  std::size_t best_episode = 0;
  std::vector<EpisodeStats> curve;
  CallCounters counters;
  std::size_t transitions = 0;  // D-hat size at the end
  std::size_t profile_size = 0; // M-hat size at the end
};

TrainResult train(const RunConfig& cfg, const Splits& splits, std::uint64_t seed, const TraceHook* hook = nullptr);
TrainResult train(const RunConfig& cfg, std::uint64_t seed, const TraceHook* hook = nullptr);

struct BacktestResult {
  PerformanceReport report;
  EpisodeTrace trace;
  CallCounters counters;
};

/// Deterministic pass with exploration off; solver and observer active per tier.
BacktestResult backtest(const Policy& policy, const OhlcvSeries& segment);
BacktestResult backtest(Strategy& strategy, const OhlcvSeries& segment, const RunConfig& cfg);

/// Agent variants: agent (configured tier), td3 | single, dual, triple-dc,
/// triple-mlp; a "-noaction" suffix sets lambda2 = 0. nullopt for baselines.
std::optional<RunConfig> resolve_variant(const std::string& name, const RunConfig& base);

struct StrategyRow {
  std::string strategy;
  double ar = 0.0;
  double mdd = 0.0;
  double sharpe = 0.0;
  double risk = 0.0;
  double vol = 0.0;
  std::size_t t_days = 0;
  double p_value = 1.0;
  bool significant = false;
  std::string data_hash;
  std::vector<double> seed_mean_returns;  // Wilcoxon sample
  std::vector<double> seed_mdd;
  std::vector<double> seed_risk;
  std::vector<double> equity;  // seed-averaged per-day series
  std::vector<double> risk_series;
  std::vector<double> ctrl_series;

  bool operator==(const StrategyRow&) const = default;
};

struct ComparisonReport {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string reference;
  std::vector<StrategyRow> rows;
  std::size_t backtests = 0;

  bool operator==(const ComparisonReport&) const = default;
};

/// Per-seed backtests on the test split, seed-averaged metrics, Wilcoxon of
/// per-seed mean daily returns against the reference row; sorted by SR.
ComparisonReport compare(const RunConfig& cfg, const std::vector<std::string>& strategies,
                         const std::vector<std::uint64_t>& seeds);

/// single, dual, and triple x {dc, mlp} x {lambda2 = 0, lambda2 > 0}.
std::vector<std::string> ablation_variants();
ComparisonReport ablate(const RunConfig& cfg);

enum class ReportFormat { Json, Csv, PlotData };

std::string report_to_json(const ComparisonReport& r);
ComparisonReport report_from_json(const std::string& text);
std::string report_to_csv(const ComparisonReport& r);
/// Long format: strategy,series,day,value for series equity, risk and ctrl.
std::string report_to_plotdata(const ComparisonReport& r);

std::string performance_to_json(const PerformanceReport& p);
PerformanceReport performance_from_json(const std::string& text);

/// Writes report.json, report.csv or plotdata.csv under `dir`; returns the path.
std::filesystem::path emit_report(const ComparisonReport& r, ReportFormat format, const std::filesystem::path& dir);

}  // namespace triad
