#include "triad/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "triad/error.hpp"
#include "triad/simd.hpp"

namespace triad {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::chrono::year_month_day parse_ymd(const std::string& s) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return {};
  auto num = [&](std::size_t off, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data() + off, s.data() + off + len, out);
    return ec == std::errc() && ptr == s.data() + off + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return {};
  return std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d};
}

std::string format_ymd(std::chrono::year_month_day ymd) {
  std::ostringstream os;
  os << std::setfill('0') << std::setw(4) << static_cast<int>(ymd.year()) << '-' << std::setw(2)
     << static_cast<unsigned>(ymd.month()) << '-' << std::setw(2)
     << static_cast<unsigned>(ymd.day());
  return os.str();
}

struct Bar {
  double open, high, low, close;
};

std::string row_msg(std::size_t line, const std::string& what) {
  return what + " (row " + std::to_string(line) + ")";
}

void check_price(double v, std::size_t line) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(Errc::NonPositivePrice, row_msg(line, "price must be positive"));
  }
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(Errc::MissingColumn, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

OhlcvSeries assemble(std::vector<std::string> assets,
                     const std::vector<std::map<std::string, Bar>>& per_asset) {
  std::set<std::string> common;
  bool first = true;
  for (const auto& bars : per_asset) {
    std::set<std::string> dates;
    for (const auto& [d, _] : bars) dates.insert(d);
    if (first) {
      common = std::move(dates);
      first = false;
    } else {
      std::set<std::string> next;
      std::set_intersection(common.begin(), common.end(), dates.begin(), dates.end(),
                            std::inserter(next, next.begin()));
      common = std::move(next);
    }
  }
  if (common.empty()) throw Error(Errc::EmptyIntersection, "assets share no dates");

  OhlcvSeries s;
  s.asset_ids = std::move(assets);
  s.dates.assign(common.begin(), common.end());
  const std::size_t t_days = s.dates.size();
  const std::size_t n = s.asset_ids.size();
  s.open = Matrix(t_days, n);
  s.high = Matrix(t_days, n);
  s.low = Matrix(t_days, n);
  s.close = Matrix(t_days, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < t_days; ++t) {
      const Bar& b = per_asset[i].at(s.dates[t]);
      s.open(t, i) = b.open;
      s.high(t, i) = b.high;
      s.low(t, i) = b.low;
      s.close(t, i) = b.close;
    }
  }
  if (t_days < 2) throw Error(Errc::SeriesTooShort, "series needs at least two common days");
  return s;
}

}  // namespace

bool is_iso_date(const std::string& s) { return parse_ymd(s).ok(); }

void OhlcvSeries::validate() const {
  const std::size_t t_days = close.rows();
  const std::size_t n = close.cols();
  if (asset_ids.size() != n || dates.size() != t_days) {
    throw Error(Errc::DimensionMismatch, "series axes do not match price matrices");
  }
  for (const Matrix* m : {&open, &high, &low, &close}) {
    if (m->rows() != t_days || m->cols() != n) {
      throw Error(Errc::DimensionMismatch, "OHLC matrices differ in shape");
    }
    for (std::size_t t = 0; t < t_days; ++t)
      for (double v : m->row(t)) check_price(v, t + 1);
  }
  if (t_days < 2) throw Error(Errc::SeriesTooShort, "series needs at least two days");
}

OhlcvSeries OhlcvSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > days()) throw Error(Errc::IndexOutOfRange, "invalid slice bounds");
  OhlcvSeries s;
  s.asset_ids = asset_ids;
  s.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(begin),
                 dates.begin() + static_cast<std::ptrdiff_t>(end));
  auto cut = [&](const Matrix& m) {
    std::vector<double> d(m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
                          m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols()));
    return Matrix(end - begin, m.cols(), std::move(d));
  };
  s.open = cut(open);
  s.high = cut(high);
  s.low = cut(low);
  s.close = cut(close);
  return s;
}

ReturnsMatrix daily_returns(const OhlcvSeries& series) {
  const std::size_t t_days = series.days();
  const std::size_t n = series.assets();
  if (t_days < 2) throw Error(Errc::SeriesTooShort, "need two days for returns");
  ReturnsMatrix r{Matrix(t_days - 1, n)};
  for (std::size_t t = 1; t < t_days; ++t)
    for (std::size_t i = 0; i < n; ++i)
      r.values(t - 1, i) = series.close(t, i) / series.close(t - 1, i) - 1.0;
  return r;
}

OhlcvSeries parse_ohlcv(std::istream& in, const CsvConfig& config) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "empty CSV (no header)");
  const std::vector<std::string> header = split(line, config.delimiter);

  CsvLayout layout = config.layout;
  if (layout == CsvLayout::Auto) {
    layout = std::find(header.begin(), header.end(), config.asset_column) != header.end()
                 ? CsvLayout::Long
                 : CsvLayout::Wide;
  }
  const std::size_t date_col = require_column(header, config.date_column);

  std::vector<std::string> assets;
  std::vector<std::map<std::string, Bar>> bars;
  std::size_t line_no = 1;

  auto check_date = [&](const std::string& d) {
    if (!is_iso_date(d)) throw Error(Errc::UnparseableDate, row_msg(line_no, "bad date '" + d + "'"));
  };

  if (layout == CsvLayout::Long) {
    const std::size_t asset_col = require_column(header, config.asset_column);
    const std::size_t cols[4] = {require_column(header, config.open_column),
                                 require_column(header, config.high_column),
                                 require_column(header, config.low_column),
                                 require_column(header, config.close_column)};
    std::unordered_map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto f = split(line, config.delimiter);
      if (f.size() < header.size()) throw Error(Errc::MalformedRow, row_msg(line_no, "too few fields"));
      check_date(f[date_col]);
      double v[4];
      for (int k = 0; k < 4; ++k) {
        const auto p = parse_double(f[cols[k]]);
        if (!p) throw Error(Errc::MalformedRow, row_msg(line_no, "unparseable price"));
        check_price(*p, line_no);
        v[k] = *p;
      }
      auto [it, inserted] = index.try_emplace(f[asset_col], assets.size());
      if (inserted) {
        assets.push_back(f[asset_col]);
        bars.emplace_back();
      }
      if (!bars[it->second].emplace(f[date_col], Bar{v[0], v[1], v[2], v[3]}).second) {
        throw Error(Errc::MalformedRow, row_msg(line_no, "duplicate date for asset"));
      }
    }
  } else {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == date_col) continue;
      cols.push_back(c);
      assets.push_back(header[c]);
    }
    if (assets.empty()) throw Error(Errc::MissingColumn, "wide CSV has no asset columns");
    bars.resize(assets.size());
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto f = split(line, config.delimiter);
      check_date(f[date_col]);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] >= f.size() || f[cols[k]].empty()) continue;  // missing cell
        const auto p = parse_double(f[cols[k]]);
        if (!p) throw Error(Errc::MalformedRow, row_msg(line_no, "unparseable price"));
        check_price(*p, line_no);
        if (!bars[k].emplace(f[date_col], Bar{*p, *p, *p, *p}).second) {
          throw Error(Errc::MalformedRow, row_msg(line_no, "duplicate date"));
        }
      }
    }
  }
  if (assets.empty()) throw Error(Errc::EmptyIntersection, "CSV has no data rows");
  return assemble(std::move(assets), bars);
}

OhlcvSeries load_ohlcv(const std::filesystem::path& path, const CsvConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return parse_ohlcv(in, config);
}

void write_ohlcv_csv(std::ostream& out, const OhlcvSeries& s, char d) {
  out << "date" << d << "asset" << d << "open" << d << "high" << d << "low" << d << "close\n";
  out << std::setprecision(17);
  for (std::size_t t = 0; t < s.days(); ++t) {
    for (std::size_t i = 0; i < s.assets(); ++i) {
      out << s.dates[t] << d << s.asset_ids[i] << d << s.open(t, i) << d << s.high(t, i) << d
          << s.low(t, i) << d << s.close(t, i) << '\n';
    }
  }
}

std::vector<double> price_relatives(const OhlcvSeries& series, std::size_t t) {
  if (t < 1 || t >= series.days()) throw Error(Errc::IndexOutOfRange, "day index out of range");
  std::vector<double> rel(series.assets());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = series.close(t, i) / series.close(t - 1, i);
  return rel;
}

CovarianceEstimate rolling_covariance(const ReturnsMatrix& returns, std::size_t t, std::size_t k) {
  if (k < 2) throw Error(Errc::InsufficientHistory, "covariance window must be >= 2");
  if (t < k + 1 || t - 1 > returns.values.rows()) {
    throw Error(Errc::InsufficientHistory,
                "need " + std::to_string(k) + " returns before day " + std::to_string(t));
  }
  const std::size_t n = returns.values.cols();
  const std::size_t first = t - 1 - k;

  // Centered columns, asset-major, so each covariance entry is one dot product.
  Matrix centered(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t r = 0; r < k; ++r) mean += returns.values(first + r, i);
    mean /= static_cast<double>(k);
    for (std::size_t r = 0; r < k; ++r) centered(i, r) = returns.values(first + r, i) - mean;
  }
  CovarianceEstimate est{Matrix(n, n), k, t};
  const double denom = static_cast<double>(k - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double c = simd::dot(centered.row(i), centered.row(j)) / denom;
      est.matrix(i, j) = c;
      est.matrix(j, i) = c;
    }
  }
  return est;
}

std::vector<std::string> business_days(const std::string& start, std::size_t count) {
  using namespace std::chrono;
  const year_month_day ymd = parse_ymd(start);
  if (!ymd.ok()) throw Error(Errc::UnparseableDate, "bad start date '" + start + "'");
  sys_days day{ymd};
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.push_back(format_ymd(year_month_day{day}));
    day += days{1};
  }
  return out;
}

OhlcvSeries synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  const std::size_t n = spec.assets;
  if (n == 0) throw Error(Errc::InvalidRegime, "synthetic series needs at least one asset");
  if (!(spec.initial_price > 0.0)) throw Error(Errc::InvalidRegime, "initial price must be positive");
  if (!spec.asset_ids.empty() && spec.asset_ids.size() != n) {
    throw Error(Errc::InvalidRegime, "asset_ids length differs from asset count");
  }
  std::size_t total = 1;
  for (const Regime& r : spec.regimes) {
    if (r.volatility < 0.0 || !std::isfinite(r.volatility)) {
      throw Error(Errc::InvalidRegime, "negative volatility");
    }
    if (r.length < 0) throw Error(Errc::InvalidRegime, "negative regime length");
    if (r.correlation < 0.0 || r.correlation > 1.0) {
      throw Error(Errc::InvalidRegime, "correlation must lie in [0, 1]");
    }
    if (!r.asset_drift.empty() && r.asset_drift.size() != n) {
      throw Error(Errc::InvalidRegime, "asset_drift length differs from asset count");
    }
    if (!r.asset_vol_scale.empty() && r.asset_vol_scale.size() != n) {
      throw Error(Errc::InvalidRegime, "asset_vol_scale length differs from asset count");
    }
    for (double d : r.asset_drift)
      if (!(d > -1.0)) throw Error(Errc::InvalidRegime, "drift must exceed -100%/day");
    if (!(r.drift > -1.0)) throw Error(Errc::InvalidRegime, "drift must exceed -100%/day");
    for (double v : r.asset_vol_scale)
      if (!(v >= 0.0)) throw Error(Errc::InvalidRegime, "volatility scale must be non-negative");
    total += static_cast<std::size_t>(r.length);
  }

  OhlcvSeries s;
  if (spec.asset_ids.empty()) {
    for (std::size_t i = 0; i < n; ++i) s.asset_ids.push_back("A" + std::to_string(i));
  } else {
    s.asset_ids = spec.asset_ids;
  }
  s.dates = business_days(spec.start_date, total);
  s.open = Matrix(total, n);
  s.high = Matrix(total, n);
  s.low = Matrix(total, n);
  s.close = Matrix(total, n);
  for (std::size_t i = 0; i < n; ++i) {
    s.open(0, i) = s.high(0, i) = s.low(0, i) = s.close(0, i) = spec.initial_price;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n);
  std::size_t t = 1;
  for (const Regime& r : spec.regimes) {
    const double common_w = std::sqrt(r.correlation);
    const double idio_w = std::sqrt(1.0 - r.correlation);
    for (std::int64_t step = 0; step < r.length; ++step, ++t) {
      const double common = normal(rng);
      for (std::size_t i = 0; i < n; ++i) z[i] = common_w * common + idio_w * normal(rng);
      for (std::size_t i = 0; i < n; ++i) {
        const double drift = r.asset_drift.empty() ? r.drift : r.asset_drift[i];
        const double vol = r.volatility * (r.asset_vol_scale.empty() ? 1.0 : r.asset_vol_scale[i]);
        const double prev = s.close(t - 1, i);
        const double next = prev * (1.0 + drift) * std::exp(vol * z[i] - 0.5 * vol * vol);
        s.open(t, i) = prev;
        s.close(t, i) = next;
        s.high(t, i) = std::max(prev, next);
        s.low(t, i) = std::min(prev, next);
      }
    }
  }
  return s;
}

}  // namespace triad
