#include "triad/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "triad/error.hpp"

namespace triad {

using nlohmann::ordered_json;

std::string to_string(Tier t) {
  switch (t) {
    case Tier::Single: return "single";
    case Tier::Dual: return "dual";
    case Tier::Triple: return "triple";
  }
  return "triple";
}

Tier tier_from_string(const std::string& s) {
  if (s == "single") return Tier::Single;
  if (s == "dual") return Tier::Dual;
  if (s == "triple") return Tier::Triple;
  throw Error(Errc::InvalidConfig, "unknown tier '" + s + "'");
}

std::vector<std::uint64_t> RunConfig::seed_list() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) out[i] = seed + i;
  return out;
}

void RunConfig::validate() const {
  if (data.path.empty() && !data.synth) throw Error(Errc::InvalidConfig, "data needs a path or a synth spec");
  for (double r : {split.train, split.validation, split.test}) {
    if (!(r > 0.0)) throw Error(Errc::InvalidConfig, "split ratios must be positive");
  }
  if (std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
    throw Error(Errc::InvalidConfig, "split ratios must sum to 1");
  }
  if (max_episode < 1) throw Error(Errc::InvalidConfig, "max_episode must be >= 1");
  if (seed_list().empty()) throw Error(Errc::InvalidConfig, "seed list is empty");
  observer.validate();
  if (tier == Tier::Triple && observer.kind == "none") {
    throw Error(Errc::InvalidConfig, "triple tier needs an observer");
  }
  reward.validate();
  solver.validate();
  env.validate();
  agent.validate();
  baselines.validate();
  if (risk.k < 2) throw Error(Errc::InvalidConfig, "risk window k must be >= 2");
  if (metrics.days_per_year < 1) throw Error(Errc::InvalidConfig, "days_per_year must be >= 1");
  if (workers < 1) throw Error(Errc::InvalidConfig, "workers must be >= 1");
}

namespace {

template <typename T>
void read(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ordered_json regime_to_json(const Regime& r) {
  ordered_json j;
  j["drift"] = r.drift;
  j["volatility"] = r.volatility;
  j["length"] = r.length;
  j["correlation"] = r.correlation;
  if (!r.asset_drift.empty()) j["asset_drift"] = r.asset_drift;
  if (!r.asset_vol_scale.empty()) j["asset_vol_scale"] = r.asset_vol_scale;
  return j;
}

ordered_json synth_to_json(const SynthSpec& s) {
  ordered_json j;
  j["assets"] = s.assets;
  j["initial_price"] = s.initial_price;
  j["start_date"] = s.start_date;
  if (!s.asset_ids.empty()) j["asset_ids"] = s.asset_ids;
  j["regimes"] = ordered_json::array();
  for (const auto& r : s.regimes) j["regimes"].push_back(regime_to_json(r));
  return j;
}

SynthSpec synth_from_json(const ordered_json& j) {
  SynthSpec s;
  read(j, "assets", s.assets);
  read(j, "initial_price", s.initial_price);
  read(j, "start_date", s.start_date);
  read(j, "asset_ids", s.asset_ids);
  if (!j.contains("regimes") || !j.at("regimes").is_array() || j.at("regimes").empty()) {
    throw Error(Errc::InvalidConfig, "synth spec needs a non-empty regimes array");
  }
  for (const auto& rj : j.at("regimes")) {
    Regime r;
    read(rj, "drift", r.drift);
    read(rj, "volatility", r.volatility);
    read(rj, "length", r.length);
    read(rj, "correlation", r.correlation);
    read(rj, "asset_drift", r.asset_drift);
    read(rj, "asset_vol_scale", r.asset_vol_scale);
    s.regimes.push_back(std::move(r));
  }
  return s;
}

std::string boundary_name(BoundaryMode m) { return m == BoundaryMode::Target ? "target" : "hard"; }

BoundaryMode boundary_from_string(const std::string& s) {
  if (s == "hard") return BoundaryMode::Hard;
  if (s == "target") return BoundaryMode::Target;
  throw Error(Errc::InvalidConfig, "unknown boundary mode '" + s + "'");
}

ordered_json observer_json(const ObserverConfig& c) {
  return ordered_json::parse(observer_config_to_json(c));
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const ordered_json j = ordered_json::parse(json_text);
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");

    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("path")) {
        std::filesystem::path p = d.at("path").get<std::string>();
        c.data.path = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
      }
      if (d.contains("synth")) c.data.synth = synth_from_json(d.at("synth"));
      read(d, "synth_seed", c.data.synth_seed);
      if (d.contains("csv")) {
        const auto& cj = d.at("csv");
        std::string layout = "auto";
        read(cj, "layout", layout);
        if (layout == "auto") c.data.csv.layout = CsvLayout::Auto;
        else if (layout == "long") c.data.csv.layout = CsvLayout::Long;
        else if (layout == "wide") c.data.csv.layout = CsvLayout::Wide;
        else throw Error(Errc::InvalidConfig, "unknown csv layout '" + layout + "'");
        std::string delim = ",";
        read(cj, "delimiter", delim);
        if (delim.size() != 1) throw Error(Errc::InvalidConfig, "csv delimiter must be one character");
        c.data.csv.delimiter = delim[0];
        read(cj, "date_column", c.data.csv.date_column);
        read(cj, "asset_column", c.data.csv.asset_column);
        read(cj, "open_column", c.data.csv.open_column);
        read(cj, "high_column", c.data.csv.high_column);
        read(cj, "low_column", c.data.csv.low_column);
        read(cj, "close_column", c.data.csv.close_column);
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      read(s, "train", c.split.train);
      read(s, "validation", c.split.validation);
      read(s, "test", c.split.test);
    }
    read(j, "max_episode", c.max_episode);
    read(j, "seed", c.seed);
    read(j, "num_seeds", c.num_seeds);
    read(j, "seeds", c.seeds);
    if (j.contains("tier")) c.tier = tier_from_string(j.at("tier").get<std::string>());
    if (j.contains("observer")) {
      c.observer = observer_config_from_json(j.at("observer").dump());
    }
    if (j.contains("reward")) {
      read(j.at("reward"), "lambda1", c.reward.lambda1);
      read(j.at("reward"), "lambda2", c.reward.lambda2);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      read(s, "optimizer", c.solver.optimizer);
      read(s, "population", c.solver.de.population);
      read(s, "mutation", c.solver.de.mutation);
      read(s, "crossover", c.solver.de.crossover);
      read(s, "budget", c.solver.budget);
      read(s, "mu", c.solver.mu);
      if (s.contains("boundary")) c.solver.boundary = boundary_from_string(s.at("boundary").get<std::string>());
    }
    if (j.contains("env")) {
      read(j.at("env"), "window", c.env.window);
      read(j.at("env"), "c_tx", c.env.c_tx);
      read(j.at("env"), "c0", c.env.c0);
    }
    if (j.contains("metrics")) {
      read(j.at("metrics"), "risk_free", c.metrics.risk_free);
      read(j.at("metrics"), "sigma_beta", c.metrics.sigma_beta);
      read(j.at("metrics"), "days_per_year", c.metrics.days_per_year);
    }
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      read(a, "hidden", c.agent.hidden);
      read(a, "gamma", c.agent.gamma);
      read(a, "tau", c.agent.tau);
      read(a, "policy_delay", c.agent.policy_delay);
      read(a, "explore_sigma", c.agent.explore_sigma);
      read(a, "smooth_sigma", c.agent.smooth_sigma);
      read(a, "smooth_clip", c.agent.smooth_clip);
      read(a, "batch_size", c.agent.batch_size);
      read(a, "buffer_capacity", c.agent.buffer_capacity);
      read(a, "warmup", c.agent.warmup);
      read(a, "updates_per_step", c.agent.updates_per_step);
      read(a, "actor_lr", c.agent.actor_lr);
      read(a, "critic_lr", c.agent.critic_lr);
      read(a, "reward_scale", c.agent.reward_scale);
    }
    if (j.contains("risk")) {
      read(j.at("risk"), "k", c.risk.k);
      if (j.at("risk").contains("form")) c.risk.form = risk_form_from_string(j.at("risk").at("form").get<std::string>());
    }
    c.solver.risk_form = c.risk.form;
    read(j, "strategies", c.strategies);
    if (j.contains("baselines")) {
      const auto& b = j.at("baselines");
      read(b, "eg_eta", c.baselines.eg_eta);
      read(b, "olmar_window", c.baselines.olmar_window);
      read(b, "olmar_epsilon", c.baselines.olmar_epsilon);
      read(b, "pamr_epsilon", c.baselines.pamr_epsilon);
      read(b, "rmr_window", c.baselines.rmr_window);
      read(b, "rmr_epsilon", c.baselines.rmr_epsilon);
      read(b, "corn_window", c.baselines.corn_window);
      read(b, "corn_rho", c.baselines.corn_rho);
    }
    read(j, "reference", c.reference);
    if (j.contains("selection")) {
      const auto s = j.at("selection").get<std::string>();
      if (s == "j") c.selection = SelectionMetric::J;
      else if (s == "sharpe") c.selection = SelectionMetric::Sharpe;
      else throw Error(Errc::InvalidConfig, "selection must be j or sharpe");
    }
    read(j, "workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidConfig, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string to_json(const RunConfig& c) {
  ordered_json j;
  ordered_json d;
  if (!c.data.path.empty()) d["path"] = c.data.path.generic_string();
  if (c.data.synth) d["synth"] = synth_to_json(*c.data.synth);
  d["synth_seed"] = c.data.synth_seed;
  const char* layouts[] = {"auto", "long", "wide"};
  d["csv"] = {{"layout", layouts[static_cast<int>(c.data.csv.layout)]},
              {"delimiter", std::string(1, c.data.csv.delimiter)},
              {"date_column", c.data.csv.date_column},
              {"asset_column", c.data.csv.asset_column},
              {"open_column", c.data.csv.open_column},
              {"high_column", c.data.csv.high_column},
              {"low_column", c.data.csv.low_column},
              {"close_column", c.data.csv.close_column}};
  j["data"] = d;
  j["split"] = {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}};
  j["max_episode"] = c.max_episode;
  j["seed"] = c.seed;
  j["num_seeds"] = c.num_seeds;
  j["seeds"] = c.seeds;
  j["tier"] = to_string(c.tier);
  j["observer"] = observer_json(c.observer);
  j["reward"] = {{"lambda1", c.reward.lambda1}, {"lambda2", c.reward.lambda2}};
  j["solver"] = {{"optimizer", c.solver.optimizer},     {"population", c.solver.de.population},
                 {"mutation", c.solver.de.mutation},    {"crossover", c.solver.de.crossover},
                 {"budget", c.solver.budget},           {"mu", c.solver.mu},
                 {"boundary", boundary_name(c.solver.boundary)}};
  j["env"] = {{"window", c.env.window}, {"c_tx", c.env.c_tx}, {"c0", c.env.c0}};
  j["metrics"] = {{"risk_free", c.metrics.risk_free},
                  {"sigma_beta", c.metrics.sigma_beta},
                  {"days_per_year", c.metrics.days_per_year}};
  j["agent"] = {{"hidden", c.agent.hidden},
                {"gamma", c.agent.gamma},
                {"tau", c.agent.tau},
                {"policy_delay", c.agent.policy_delay},
                {"explore_sigma", c.agent.explore_sigma},
                {"smooth_sigma", c.agent.smooth_sigma},
                {"smooth_clip", c.agent.smooth_clip},
                {"batch_size", c.agent.batch_size},
                {"buffer_capacity", c.agent.buffer_capacity},
                {"warmup", c.agent.warmup},
                {"updates_per_step", c.agent.updates_per_step},
                {"actor_lr", c.agent.actor_lr},
                {"critic_lr", c.agent.critic_lr},
                {"reward_scale", c.agent.reward_scale}};
  j["risk"] = {{"k", c.risk.k}, {"form", to_string(c.risk.form)}};
  j["strategies"] = c.strategies;
  j["baselines"] = {{"eg_eta", c.baselines.eg_eta},
                    {"olmar_window", c.baselines.olmar_window},
                    {"olmar_epsilon", c.baselines.olmar_epsilon},
                    {"pamr_epsilon", c.baselines.pamr_epsilon},
                    {"rmr_window", c.baselines.rmr_window},
                    {"rmr_epsilon", c.baselines.rmr_epsilon},
                    {"corn_window", c.baselines.corn_window},
                    {"corn_rho", c.baselines.corn_rho}};
  j["reference"] = c.reference;
  j["selection"] = c.selection == SelectionMetric::Sharpe ? "sharpe" : "j";
  j["workers"] = c.workers;
  return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  // worker count does not change results
  RunConfig c = cfg;
  c.workers = 1;
  const std::string text = to_json(c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  try {
    return synth_from_json(ordered_json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("synth spec: ") + e.what());
  }
}

std::string to_json(const SynthSpec& spec) { return synth_to_json(spec).dump(2); }

OhlcvSeries load_data(const RunConfig& cfg) {
  if (!cfg.data.path.empty()) return load_ohlcv(cfg.data.path, cfg.data.csv);
  return synth_generate(*cfg.data.synth, cfg.data.synth_seed);
}

}  // namespace triad
