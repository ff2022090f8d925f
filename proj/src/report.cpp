#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "triad/error.hpp"
#include "triad/harness.hpp"

namespace triad {

using nlohmann::ordered_json;

namespace {

ordered_json row_to_json(const StrategyRow& r) {
  ordered_json j;
  j["strategy"] = r.strategy;
  j["ar"] = r.ar;
  j["mdd"] = r.mdd;
  j["sharpe"] = r.sharpe;
  j["risk"] = r.risk;
  j["vol"] = r.vol;
  j["t_days"] = r.t_days;
  j["p_value"] = r.p_value;
  j["significant"] = r.significant;
  j["data_hash"] = r.data_hash;
  j["seed_mean_returns"] = r.seed_mean_returns;
  j["seed_mdd"] = r.seed_mdd;
  j["seed_risk"] = r.seed_risk;
  j["equity"] = r.equity;
  j["risk_series"] = r.risk_series;
  j["ctrl_series"] = r.ctrl_series;
  return j;
}

StrategyRow row_from_json(const ordered_json& j) {
  StrategyRow r;
  r.strategy = j.at("strategy").get<std::string>();
  r.ar = j.at("ar").get<double>();
  r.mdd = j.at("mdd").get<double>();
  r.sharpe = j.at("sharpe").get<double>();
  r.risk = j.at("risk").get<double>();
  r.vol = j.at("vol").get<double>();
  r.t_days = j.at("t_days").get<std::size_t>();
  r.p_value = j.at("p_value").get<double>();
  r.significant = j.at("significant").get<bool>();
  r.data_hash = j.at("data_hash").get<std::string>();
  r.seed_mean_returns = j.at("seed_mean_returns").get<std::vector<double>>();
  r.seed_mdd = j.at("seed_mdd").get<std::vector<double>>();
  r.seed_risk = j.at("seed_risk").get<std::vector<double>>();
  r.equity = j.at("equity").get<std::vector<double>>();
  r.risk_series = j.at("risk_series").get<std::vector<double>>();
  r.ctrl_series = j.at("ctrl_series").get<std::vector<double>>();
  return r;
}

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(Errc::BadCheckpoint, "truncated policy archive");
  return v;
}

std::string get_string(std::istream& in) {
  const auto len = get_pod<std::uint64_t>(in);
  if (len > (1ULL << 32)) throw Error(Errc::BadCheckpoint, "implausible string length in policy archive");
  std::string s(len, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) throw Error(Errc::BadCheckpoint, "truncated policy archive");
  return s;
}

constexpr char kPolicyMagic[4] = {'T', 'P', 'C', '1'};
constexpr std::uint32_t kPolicyVersion = 1;

}  // namespace

std::string report_to_json(const ComparisonReport& r) {
  ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seeds"] = r.seeds;
  j["reference"] = r.reference;
  j["backtests"] = r.backtests;
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) j["rows"].push_back(row_to_json(row));
  return j.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    ComparisonReport r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.reference = j.at("reference").get<std::string>();
    r.backtests = j.at("backtests").get<std::size_t>();
    for (const auto& row : j.at("rows")) r.rows.push_back(row_from_json(row));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRow, std::string("report: ") + e.what());
  }
}

std::string report_to_csv(const ComparisonReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "strategy,ar,mdd,sharpe,risk\n";
  for (const auto& row : r.rows) out << row.strategy << ',' << row.ar << ',' << row.mdd << ',' << row.sharpe << ',' << row.risk << '\n';
  return out.str();
}

std::string report_to_plotdata(const ComparisonReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "strategy,series,day,value\n";
  for (const auto& row : r.rows) {
    const std::pair<const char*, const std::vector<double>*> series[] = {
        {"equity", &row.equity}, {"risk", &row.risk_series}, {"ctrl", &row.ctrl_series}};
    for (const auto& [name, values] : series)
      for (std::size_t d = 0; d < values->size(); ++d)
        out << row.strategy << ',' << name << ',' << d << ',' << (*values)[d] << '\n';
  }
  return out.str();
}

std::string performance_to_json(const PerformanceReport& p) {
  ordered_json j;
  j["ar"] = p.annual_return;
  j["mdd"] = p.mdd;
  j["sharpe"] = p.sharpe;
  j["risk"] = p.mean_short_term_risk;
  j["vol"] = p.long_term_vol;
  j["t_days"] = p.trading_days;
  j["mean_daily_return"] = p.mean_daily_return;
  j["risk_free"] = p.risk_free;
  j["equity_curve"] = p.equity_curve;
  j["daily_returns"] = p.daily_returns;
  return j.dump(2) + "\n";
}

PerformanceReport performance_from_json(const std::string& text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    PerformanceReport p;
    p.annual_return = j.at("ar").get<double>();
    p.mdd = j.at("mdd").get<double>();
    p.sharpe = j.at("sharpe").get<double>();
    p.mean_short_term_risk = j.at("risk").get<double>();
    p.long_term_vol = j.at("vol").get<double>();
    p.trading_days = j.at("t_days").get<std::size_t>();
    p.mean_daily_return = j.at("mean_daily_return").get<double>();
    p.risk_free = j.at("risk_free").get<double>();
    p.equity_curve = j.at("equity_curve").get<std::vector<double>>();
    p.daily_returns = j.at("daily_returns").get<std::vector<double>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRow, std::string("performance report: ") + e.what());
  }
}

std::filesystem::path emit_report(const ComparisonReport& r, ReportFormat format, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::filesystem::path path;
  std::string body;
  switch (format) {
    case ReportFormat::Json:
      path = dir / "report.json";
      body = report_to_json(r);
      break;
    case ReportFormat::Csv:
      path = dir / "report.csv";
      body = report_to_csv(r);
      break;
    case ReportFormat::PlotData:
      path = dir / "plotdata.csv";
      body = report_to_plotdata(r);
      break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(body.data(), static_cast<std::streamsize>(body.size()))) {
    throw Error(Errc::IoFailure, "cannot write " + path.string());
  }
  return path;
}

void write_policy(std::ostream& out, const Policy& p) {
  out.write(kPolicyMagic, 4);
  put_u32(out, kPolicyVersion);
  put_string(out, to_json(p.config));
  ordered_json meta;
  meta["tier"] = to_string(p.tier);
  meta["seed"] = p.seed;
  meta["base_risk"] = p.base_risk;
  meta["config_hash"] = hex64(config_hash(p.config));
  put_string(out, meta.dump());
  write_agent(out, p.agent);
  put_string(out, p.observer ? p.observer->to_json() : std::string());
  if (!out) throw Error(Errc::IoFailure, "failed writing policy archive");
}

Policy read_policy(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kPolicyMagic, 4) != 0) {
    throw Error(Errc::BadCheckpoint, "not a policy archive");
  }
  if (get_pod<std::uint32_t>(in) != kPolicyVersion) throw Error(Errc::BadCheckpoint, "unsupported policy version");
  Policy p;
  try {
    p.config = parse_config(get_string(in));
  } catch (const Error& e) {
    throw Error(Errc::BadCheckpoint, std::string("embedded config: ") + e.what());
  }
  try {
    const ordered_json meta = ordered_json::parse(get_string(in));
    p.tier = tier_from_string(meta.at("tier").get<std::string>());
    p.seed = meta.at("seed").get<std::uint64_t>();
    p.base_risk = meta.at("base_risk").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCheckpoint, std::string("policy metadata: ") + e.what());
  }
  p.agent = read_agent(in);
  const std::string obs = get_string(in);
  if (!obs.empty()) p.observer = observer_from_json(obs);
  return p;
}

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  write_policy(out, policy);
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open checkpoint " + path.string());
  return read_policy(in);
}

}  // namespace triad
