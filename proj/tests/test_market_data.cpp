#include <sstream>

#include <Eigen/Dense>

#include "support.hpp"
#include "triad/market_data.hpp"

using namespace triad;

namespace {

OhlcvSeries parse(const std::string& text, CsvConfig cfg = {}) {
  std::istringstream in(text);
  return parse_ohlcv(in, cfg);
}

// Two-pass covariance of return rows [first, first + k).
Matrix two_pass_cov(const ReturnsMatrix& r, std::size_t first, std::size_t k) {
  const std::size_t n = r.values.cols();
  std::vector<double> mean(n, 0.0);
  for (std::size_t d = first; d < first + k; ++d)
    for (std::size_t i = 0; i < n; ++i) mean[i] += r.values(d, i);
  for (auto& m : mean) m /= static_cast<double>(k);
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t d = first; d < first + k; ++d) s += (r.values(d, i) - mean[i]) * (r.values(d, j) - mean[j]);
      c(i, j) = s / static_cast<double>(k - 1);
    }
  return c;
}

}  // namespace

TEST_CASE("long CSV parses into a T x N panel") {
  const auto s = parse(
      "date,asset,open,high,low,close,volume\n"
      "2021-01-04,AAA,10,11,9,10.5,100\n"
      "2021-01-04,BBB,20,21,19,20.5,100\n"
      "2021-01-05,AAA,10.5,12,10,11,100\n"
      "2021-01-05,BBB,20.5,22,20,21,100\n"
      "2021-01-06,AAA,11,11.5,10.5,11.2,100\n"
      "2021-01-06,BBB,21,21.5,20.5,21.3,100\n");
  CHECK(s.days() == 3);
  CHECK(s.assets() == 2);
  CHECK(s.asset_ids == std::vector<std::string>{"AAA", "BBB"});
  CHECK(s.close(1, 0) == 11.0);
  CHECK(s.high(0, 1) == 21.0);
  CHECK(s.dates.front() == "2021-01-04");
}

TEST_CASE("rows are sorted by date regardless of file order") {
  const auto s = parse(
      "date,asset,open,high,low,close\n"
      "2021-01-06,A,1,1,1,3\n"
      "2021-01-04,A,1,1,1,1\n"
      "2021-01-05,A,1,1,1,2\n");
  CHECK(s.dates == std::vector<std::string>{"2021-01-04", "2021-01-05", "2021-01-06"});
  CHECK(s.close(2, 0) == 3.0);
}

TEST_CASE("zero close price is rejected") {
  CHECK_ERRC(parse("date,asset,open,high,low,close\n2021-01-04,A,1,1,1,0.0\n2021-01-05,A,1,1,1,1\n"),
             Errc::NonPositivePrice);
}

TEST_CASE("missing column and bad dates are reported") {
  CHECK_ERRC(parse("date,asset,open,high,low\n2021-01-04,A,1,1,1\n"), Errc::MissingColumn);
  CHECK_ERRC(parse("date,asset,open,high,low,close\n04/01/2021,A,1,1,1,1\n"), Errc::UnparseableDate);
  try {
    parse("date,asset,open,high,low,close\n2021-01-04,A,1,1,1,1\n2021-13-01,A,1,1,1,1\n");
    FAIL("expected UnparseableDate");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnparseableDate);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("assets are aligned on the intersection of dates") {
  // A trades days 0..9, B trades days 5..14: overlap of 5 days.
  const auto days = business_days("2021-03-01", 15);
  std::ostringstream csv;
  csv << "date,asset,open,high,low,close\n";
  for (std::size_t d = 0; d < 10; ++d) csv << days[d] << ",A,1,1,1," << 100 + d << "\n";
  for (std::size_t d = 5; d < 15; ++d) csv << days[d] << ",B,1,1,1," << 200 + d << "\n";
  const auto s = parse(csv.str());
  CHECK(s.days() == 5);
  CHECK(s.dates.front() == days[5]);
  CHECK(s.dates.back() == days[9]);
  CHECK(s.close(0, 0) == 105.0);
  CHECK(s.close(0, 1) == 205.0);

  std::ostringstream disjoint;
  disjoint << "date,asset,open,high,low,close\n"
           << days[0] << ",A,1,1,1,1\n" << days[1] << ",B,1,1,1,1\n";
  CHECK_ERRC(parse(disjoint.str()), Errc::EmptyIntersection);
}

TEST_CASE("wide close-only CSV fills OHLC from close and skips empty cells") {
  const auto s = parse(
      "date;X;Y\n"
      "2022-02-01;10;20\n"
      "2022-02-02;11;\n"
      "2022-02-03;12;22\n",
      CsvConfig{CsvLayout::Auto, ';'});
  CHECK(s.assets() == 2);
  CHECK(s.days() == 2);
  CHECK(s.open(1, 0) == 12.0);
  CHECK(s.low(1, 1) == 22.0);
}

TEST_CASE("CSV writer round-trips exactly") {
  const auto s = testing::random_walk(30, 3, 5);
  std::stringstream io;
  write_ohlcv_csv(io, s);
  const auto back = parse_ohlcv(io);
  CHECK(back.close == s.close);
  CHECK(back.open == s.open);
  CHECK(back.dates == s.dates);
  CHECK(back.asset_ids == s.asset_ids);
}

TEST_CASE("price relatives") {
  const auto flat = testing::panel({{5, 7}, {5, 7}, {5, 7}});
  CHECK(price_relatives(flat, 1) == std::vector<double>{1.0, 1.0});
  const auto s = testing::panel({{100, 100}, {110, 90}});
  const auto r = price_relatives(s, 1);
  CHECK(r[0] == doctest::Approx(1.10).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(0.90).epsilon(1e-15));
  CHECK_ERRC(price_relatives(s, 0), Errc::IndexOutOfRange);
  CHECK_ERRC(price_relatives(s, 2), Errc::IndexOutOfRange);

  const auto w = testing::random_walk(60, 5, 9);
  for (std::size_t t = 1; t < w.days(); ++t) {
    const auto rel = price_relatives(w, t);
    for (std::size_t i = 0; i < 5; ++i) CHECK(rel[i] == doctest::Approx(w.close(t, i) / w.close(t - 1, i)).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < 5; ++i) {
    double prod = 1.0;
    for (std::size_t t = 1; t < w.days(); ++t) prod *= price_relatives(w, t)[i];
    CHECK(prod == doctest::Approx(w.close(59, i) / w.close(0, i)).epsilon(1e-9));
  }
}

TEST_CASE("daily returns have T-1 rows") {
  const auto w = testing::random_walk(20, 3, 2);
  const auto r = daily_returns(w);
  CHECK(r.values.rows() == 19);
  CHECK(r.values(4, 1) == doctest::Approx(w.close(5, 1) / w.close(4, 1) - 1.0).epsilon(1e-12));
}

TEST_CASE("rolling covariance examples") {
  // Constant returns: prices grow 1% per day.
  std::vector<std::vector<double>> closes{{100.0, 50.0}};
  for (int d = 1; d < 12; ++d) closes.push_back({closes.back()[0] * 1.01, closes.back()[1] * 1.01});
  const auto flat = rolling_covariance(daily_returns(testing::panel(closes)), 11, 5);
  for (double v : flat.matrix.data()) CHECK(std::abs(v) < 1e-18);

  // One asset, returns [0.01, 0.03] -> variance 0.0002.
  const auto one = testing::panel({{100.0}, {101.0}, {104.03}});
  const auto c = rolling_covariance(daily_returns(one), 3, 2);
  CHECK(c.matrix(0, 0) == doctest::Approx(0.0002).epsilon(1e-9));
  CHECK(c.window == 2);
  CHECK(c.anchor == 3);

  CHECK_ERRC(rolling_covariance(daily_returns(one), 3, 1), Errc::InsufficientHistory);
  CHECK_ERRC(rolling_covariance(daily_returns(one), 2, 2), Errc::InsufficientHistory);
}

TEST_CASE("rolling covariance matches the two-pass oracle") {
  const auto w = testing::random_walk(80, 3, 17);
  const auto r = daily_returns(w);
  for (std::size_t t : {11, 30, 79}) {
    const auto est = rolling_covariance(r, t, 10);
    const auto oracle = two_pass_cov(r, t - 11, 10);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(est.matrix(i, j) - oracle(i, j)) < 1e-12);
  }
}

TEST_CASE("rolling covariance is symmetric, PSD, and ignores days >= t") {
  const auto w = testing::random_walk(120, 6, 23);
  const auto r = daily_returns(w);
  for (std::size_t t = 22; t < 120; t += 7) {
    const auto est = rolling_covariance(r, t, 21);
    Eigen::MatrixXd m(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(std::abs(est.matrix(i, j) - est.matrix(j, i)) < 1e-12);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = est.matrix(i, j);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);

    // Perturb every close from day t on; the estimate must not move.
    auto future = w;
    for (std::size_t d = t; d < future.days(); ++d)
      for (std::size_t i = 0; i < 6; ++i) future.close(d, i) *= 1.5 + 0.1 * static_cast<double>(i);
    CHECK(rolling_covariance(daily_returns(future), t, 21).matrix == est.matrix);
  }
}

TEST_CASE("synthetic generator") {
  SynthSpec flat;
  flat.assets = 3;
  flat.regimes = {Regime{0.0, 0.0, 20, 0.5, {}, {}}};
  const auto f = synth_generate(flat, 1);
  CHECK(f.days() == 21);
  for (double v : f.close.data()) CHECK(v == 100.0);

  SynthSpec drift;
  drift.assets = 2;
  drift.regimes = {Regime{0.001, 0.0, 10, 0.0, {}, {}}};
  const auto g = synth_generate(drift, 7);
  for (std::size_t t = 0; t <= 10; ++t) CHECK(g.close(t, 0) == doctest::Approx(100.0 * std::pow(1.001, t)).epsilon(1e-12));

  SynthSpec two;
  two.assets = 4;
  two.regimes = {Regime{0.0005, 0.01, 50, 0.3, {}, {}}, Regime{-0.002, 0.03, 30, 0.7, {}, {0.5, 1, 1.5, 2}}};
  const auto a = synth_generate(two, 99), b = synth_generate(two, 99), c = synth_generate(two, 100);
  CHECK(a.close == b.close);
  CHECK(a.dates == b.dates);
  CHECK_FALSE(a.close == c.close);
  a.validate();
  for (std::size_t t = 0; t < a.days(); ++t)
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.high(t, i) >= a.close(t, i));
      CHECK(a.low(t, i) <= a.open(t, i));
    }

  SynthSpec bad = two;
  bad.regimes[0].volatility = -0.1;
  CHECK_ERRC(synth_generate(bad, 1), Errc::InvalidRegime);
  bad = two;
  bad.regimes[1].length = -3;
  CHECK_ERRC(synth_generate(bad, 1), Errc::InvalidRegime);
}

TEST_CASE("business days skip weekends") {
  const auto d = business_days("2021-01-01", 4);  // a Friday
  CHECK(d == std::vector<std::string>{"2021-01-01", "2021-01-04", "2021-01-05", "2021-01-06"});
  CHECK(is_iso_date("2020-02-29"));
  CHECK_FALSE(is_iso_date("2021-02-29"));
}

TEST_CASE("slice keeps the axis consistent") {
  const auto w = testing::random_walk(10, 2, 3);
  const auto s = w.slice(3, 7);
  CHECK(s.days() == 4);
  CHECK(s.dates.front() == w.dates[3]);
  CHECK(s.close(0, 1) == w.close(3, 1));
  CHECK_ERRC(w.slice(5, 5), Errc::IndexOutOfRange);
}
