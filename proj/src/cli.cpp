#include "triad/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "triad/config.hpp"
#include "triad/error.hpp"
#include "triad/harness.hpp"

namespace triad::cli {

namespace {

void setup_logging() {
  auto logger = spdlog::get("triad");
  if (!logger) {
    logger = spdlog::stderr_color_mt("triad");
    spdlog::set_default_logger(logger);
  }
  const char* level = std::getenv("TRIAD_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

std::string read_file(const std::filesystem::path& p, Errc missing) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(missing, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !out.write(body.data(), static_cast<std::streamsize>(body.size()))) {
    throw Error(Errc::IoFailure, "cannot write " + p.string());
  }
}

void emit_all(const ComparisonReport& rep, const std::filesystem::path& dir) {
  for (auto f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::PlotData}) {
    std::cout << emit_report(rep, f, dir).string() << '\n';
  }
}

std::string train_summary(const TrainResult& tr, const RunConfig& cfg, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["config_hash"] = hex64(config_hash(cfg));
  j["seed"] = seed;
  j["tier"] = to_string(cfg.tier);
  j["best_episode"] = tr.best_episode;
  j["base_risk"] = tr.best.base_risk;
  j["transitions"] = tr.transitions;
  j["profile_size"] = tr.profile_size;
  j["counters"] = {{"observer", tr.counters.observer},     {"rl", tr.counters.rl},
                   {"solver", tr.counters.solver},         {"execute", tr.counters.execute},
                   {"rl_updates", tr.counters.rl_updates}, {"observer_updates", tr.counters.observer_updates}};
  j["curve"] = nlohmann::ordered_json::array();
  for (const auto& e : tr.curve) {
    j["curve"].push_back({{"episode", e.episode},
                          {"train_j", e.train_j},
                          {"validation_score", e.validation_score},
                          {"final_capital", e.final_capital}});
  }
  return j.dump(2) + "\n";
}

}  // namespace

int run(const std::vector<std::string>& args) {
  setup_logging();
  CLI::App app{"Multi-agent portfolio risk management engine"};
  app.require_subcommand(1);

  std::string config_path, out_path, checkpoint_path, data_path, strategy_name, spec_path, segment = "all";
  std::string train_dir = "train_out";
  std::optional<std::uint64_t> seed;

  auto* train_cmd = app.add_subcommand("train", "Train a policy (writes policy.bin and train.json)");
  train_cmd->add_option("--config", config_path, "Run config JSON")->required();
  train_cmd->add_option("--out", train_dir, "Output directory")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Override the config seed");

  auto* bt_cmd = app.add_subcommand("backtest", "Backtest a checkpoint or a baseline strategy");
  bt_cmd->add_option("--checkpoint", checkpoint_path, "Policy archive from train");
  bt_cmd->add_option("--strategy", strategy_name, "Baseline strategy name instead of a checkpoint");
  bt_cmd->add_option("--config", config_path, "Run config for --strategy (optional)");
  bt_cmd->add_option("--data", data_path, "Price CSV")->required();
  bt_cmd->add_option("--segment", segment, "all | train | validation | test")
      ->check(CLI::IsMember({"all", "train", "validation", "test"}));
  bt_cmd->add_option("--out", out_path, "Write the report JSON here instead of stdout");

  auto* cmp_cmd = app.add_subcommand("compare", "Compare the configured strategies over all seeds");
  cmp_cmd->add_option("--config", config_path, "Run config JSON")->required();
  cmp_cmd->add_option("--out", out_path, "Output directory")->required();

  auto* abl_cmd = app.add_subcommand("ablate", "Run the agent-tier ablation matrix");
  abl_cmd->add_option("--config", config_path, "Run config JSON")->required();
  abl_cmd->add_option("--out", out_path, "Output directory")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic OHLCV CSV");
  synth_cmd->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  synth_cmd->add_option("--out", out_path, "Output CSV")->required();
  synth_cmd->add_option("--seed", seed, "Override the spec seed");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      const RunConfig cfg = load_config(config_path);
      const std::uint64_t s = seed.value_or(cfg.seed);
      const TrainResult tr = train(cfg, s);
      const std::filesystem::path dir = train_dir;
      std::filesystem::create_directories(dir);
      save_policy(dir / "policy.bin", tr.best);
      write_file(dir / "train.json", train_summary(tr, cfg, s));
      std::cout << (dir / "policy.bin").string() << '\n' << (dir / "train.json").string() << '\n';
    } else if (*bt_cmd) {
      if (checkpoint_path.empty() == strategy_name.empty()) {
        throw Error(Errc::InvalidConfig, "backtest needs exactly one of --checkpoint or --strategy");
      }
      std::optional<Policy> policy;
      RunConfig cfg;
      if (!checkpoint_path.empty()) {
        policy = load_policy(checkpoint_path);
        cfg = policy->config;
      } else if (!config_path.empty()) {
        cfg = load_config(config_path);
      }
      const OhlcvSeries data = load_ohlcv(data_path, cfg.data.csv);
      OhlcvSeries seg = data;
      if (segment != "all") {
        Splits sp = split_series(data, cfg.split, cfg.env.window);
        seg = segment == "train" ? sp.train : segment == "validation" ? sp.validation : sp.test;
      }
      BacktestResult res;
      if (policy) {
        res = backtest(*policy, seg);
      } else {
        auto strategy = make_strategy(strategy_name, cfg.baselines);
        res = backtest(*strategy, seg, cfg);
      }
      const std::string body = performance_to_json(res.report);
      if (out_path.empty()) std::cout << body;
      else write_file(out_path, body);
    } else if (*cmp_cmd) {
      const RunConfig cfg = load_config(config_path);
      emit_all(compare(cfg, cfg.strategies, cfg.seed_list()), out_path);
    } else if (*abl_cmd) {
      emit_all(ablate(load_config(config_path)), out_path);
    } else if (*synth_cmd) {
      const std::string text = read_file(spec_path, Errc::InvalidConfig);
      const SynthSpec spec = parse_synth_spec(text);
      std::uint64_t s = 0;
      try {
        s = nlohmann::json::parse(text).value("seed", std::uint64_t{0});
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidConfig, e.what());
      }
      std::ostringstream csv;
      write_ohlcv_csv(csv, synth_generate(spec, seed.value_or(s)));
      write_file(out_path, csv.str());
      std::cout << out_path << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_data_error(e.code()) ? kExitData : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace triad::cli
