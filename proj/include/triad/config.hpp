#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "triad/baselines.hpp"
#include "triad/market_data.hpp"
#include "triad/metrics.hpp"
#include "triad/observer.hpp"
#include "triad/rl_agent.hpp"
#include "triad/solver.hpp"
#include "triad/trading_env.hpp"

namespace triad {

enum class Tier { Single, Dual, Triple };

std::string to_string(Tier t);
Tier tier_from_string(const std::string& s);

enum class SelectionMetric { J, Sharpe };

struct DataConfig {
  std::filesystem::path path;      // CSV source, resolved against the config file
  std::optional<SynthSpec> synth;  // used when no path is given
  std::uint64_t synth_seed = 0;
  CsvConfig csv;
};

struct SplitConfig {
  double train = 0.5;
  double validation = 0.2;
  double test = 0.3;
};

struct RiskConfig {
  std::size_t k = 21;
  RiskForm form = RiskForm::NormOfProduct;
};

struct RunConfig {
  DataConfig data;
  SplitConfig split;
  std::size_t max_episode = 10;
  std::uint64_t seed = 0;
  std::size_t num_seeds = 10;
  std::vector<std::uint64_t> seeds;  // explicit list overrides seed/num_seeds
  Tier tier = Tier::Triple;
  ObserverConfig observer;
  RewardConfig reward;
  SolverConfig solver;
  EnvConfig env;
  MetricsConfig metrics;
  Td3Config agent;
  RiskConfig risk;
  std::vector<std::string> strategies = {"agent", "td3", "crp", "eg", "olmar", "pamr", "rmr", "corn"};
  StrategyParams baselines;
  std::string reference = "agent";
  SelectionMetric selection = SelectionMetric::J;
  std::size_t workers = 1;

  std::vector<std::uint64_t> seed_list() const;
  void validate() const;
};

/// Missing keys take defaults; wrong types or values raise Error(InvalidConfig).
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (fixed key order). Data paths are written as given.
std::string to_json(const RunConfig& cfg);

/// FNV-1a over the canonical JSON, with the worker count left out.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

SynthSpec parse_synth_spec(const std::string& json_text);
std::string to_json(const SynthSpec& spec);

/// Loads the CSV or generates the synthetic series.
OhlcvSeries load_data(const RunConfig& cfg);

}  // namespace triad
