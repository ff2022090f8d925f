#include <cmath>

#include "support.hpp"
#include "triad/baselines.hpp"
#include "triad/solver.hpp"

using namespace triad;

namespace {

Matrix rows(const std::vector<std::vector<double>>& r) {
  Matrix m(r.size(), r.front().size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r[i].size(); ++j) m(i, j) = r[i][j];
  return m;
}

double sum_dist(const Matrix& pts, double x, double y) {
  double s = 0.0;
  for (std::size_t r = 0; r < pts.rows(); ++r) s += std::hypot(pts(r, 0) - x, pts(r, 1) - y);
  return s;
}

// Brute-force 2-D grid search, repeatedly zooming on the best cell.
std::pair<double, double> grid_median(const Matrix& pts) {
  double cx = 0.0, cy = 0.0, half = 10.0;
  for (int level = 0; level < 12; ++level) {
    double bx = cx, by = cy, best = sum_dist(pts, cx, cy);
    for (int i = -50; i <= 50; ++i)
      for (int j = -50; j <= 50; ++j) {
        const double x = cx + half * i / 50.0, y = cy + half * j / 50.0;
        const double v = sum_dist(pts, x, y);
        if (v < best) best = v, bx = x, by = y;
      }
    cx = bx, cy = by, half /= 10.0;
  }
  return {cx, cy};
}

double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("crp") {
  const auto w = crp_weights(10);
  for (double v : w) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
  auto s = make_strategy("crp");
  s->reset(3);
  const auto series = testing::random_walk(20, 3, 1);
  for (std::size_t t = 0; t < 20; ++t) CHECK(s->decide(series, t) == WeightVector::uniform(3));
}

TEST_CASE("eg update") {
  const WeightVector w({0.3, 0.7});
  CHECK(eg_update(w, std::vector<double>{1.3, 0.8}, 0.0) == w);
  const auto eq = eg_update(w, std::vector<double>{1.1, 1.1}, 0.05);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(eq[i] - w[i]) < 1e-15);

  const auto r = eg_update(WeightVector({0.5, 0.5}), std::vector<double>{1.2, 0.8}, 0.05);
  const double a = 0.5 * std::exp(0.05 * 1.2 / 1.0), b = 0.5 * std::exp(0.05 * 0.8 / 1.0);
  CHECK(std::abs(r[0] - a / (a + b)) < 1e-12);
  CHECK(std::abs(r[1] - b / (a + b)) < 1e-12);

  const auto tiny = eg_update(w, std::vector<double>{1.3, 0.8}, 1e-9);
  CHECK(std::abs(tiny[0] - w[0]) < 1e-8);
  CHECK_ERRC(eg_update(w, std::vector<double>{1.0}, 0.1), Errc::DimensionMismatch);
}

TEST_CASE("olmar step") {
  const WeightVector w({0.5, 0.5});
  CHECK(olmar_step(w, std::vector<double>{1.05, 1.05}, 10.0) == w);
  // margin already met: w.x = 1.0 >= eps
  CHECK(olmar_step(w, std::vector<double>{1.1, 0.9}, 0.9) == w);

  // lambda = (1.01 - 1.0) / 0.02 = 0.5, step = 0.5 * [0.1, -0.1]
  const auto r = olmar_step(w, std::vector<double>{1.1, 0.9}, 1.01);
  CHECK(std::abs(r[0] - 0.55) < 1e-9);
  CHECK(std::abs(r[1] - 0.45) < 1e-9);

  // lambda = 25 overshoots; projection lands on the vertex
  const auto big = olmar_step(w, std::vector<double>{1.1, 0.9}, 1.5);
  const auto want = simplex_repair(std::vector<double>{0.5 + 25 * 0.1, 0.5 - 25 * 0.1});
  CHECK(std::abs(big[0] - want[0]) < 1e-9);
  CHECK(big == WeightVector::vertex(2, 0));
}

TEST_CASE("olmar moving-average prediction") {
  // prices falling for asset 0: its MA/price > 1 so the step favours it
  const Matrix p = rows({{10, 10}, {9, 10}, {8, 10}});
  const auto r = olmar_update(WeightVector::uniform(2), p, 3, 10.0);
  CHECK(r[0] > 0.5);
  const double pred0 = (10 + 9 + 8) / 3.0 / 8.0;
  CHECK(r == olmar_step(WeightVector::uniform(2), std::vector<double>{pred0, 1.0}, 10.0));
  CHECK_ERRC(olmar_update(WeightVector::uniform(2), p, 4, 10.0), Errc::InsufficientHistory);
  CHECK_ERRC(olmar_update(WeightVector::uniform(2), p, 1, 10.0), Errc::InsufficientHistory);
}

TEST_CASE("pamr update") {
  const WeightVector w({0.5, 0.5});
  CHECK(pamr_update(w, std::vector<double>{1.2, 0.8}, 1.5) == w);
  // loss = 0.02, ||x - xbar||^2 = 0.08, tau = 0.25
  const auto r = pamr_update(w, std::vector<double>{1.2, 0.8}, 0.98);
  CHECK(std::abs(r[0] - 0.45) < 1e-9);
  CHECK(std::abs(r[1] - 0.55) < 1e-9);
  const auto far = pamr_update(w, std::vector<double>{1.2, 0.8}, 0.5);
  CHECK(far == WeightVector::vertex(2, 1));
}

TEST_CASE("l1 median") {
  SUBCASE("identical points") {
    const auto r = l1_median(rows({{1.5, 2.0, 3.0}, {1.5, 2.0, 3.0}, {1.5, 2.0, 3.0}}));
    CHECK(r.median == std::vector<double>{1.5, 2.0, 3.0});
  }
  SUBCASE("collinear points") {
    const Matrix pts = rows({{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}});
    const auto r = l1_median(pts);
    const auto [gx, gy] = grid_median(pts);
    CHECK(std::abs(r.median[0] - gx) < 1e-6);
    CHECK(std::abs(r.median[1] - gy) < 1e-6);
    CHECK(std::abs(r.median[0] - 1.0) < 1e-6);
  }
  SUBCASE("general position against the grid oracle") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      Matrix pts(5 + trial, 2);
      for (auto& v : pts.data()) v = z(rng);
      const auto r = l1_median(pts, 2000, 1e-12);
      const auto [gx, gy] = grid_median(pts);
      CHECK(sum_dist(pts, r.median[0], r.median[1]) <= sum_dist(pts, gx, gy) + 1e-9);
      CHECK(std::abs(r.median[0] - gx) < 1e-5);
      CHECK(std::abs(r.median[1] - gy) < 1e-5);
      // objective and distance to the final median never increase along the iterates
      for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(sum_dist(pts, r.trace[i][0], r.trace[i][1]) <=
              sum_dist(pts, r.trace[i - 1][0], r.trace[i - 1][1]) + 1e-12);
        CHECK(l2_dist(r.trace[i], r.median) <= l2_dist(r.trace[i - 1], r.median) + 1e-12);
      }
    }
  }
  CHECK_ERRC(l1_median(Matrix(0, 2)), Errc::InsufficientData);
}

TEST_CASE("rmr update") {
  const Matrix flat = rows({{10, 20}, {10, 20}, {10, 20}});
  CHECK(rmr_update(WeightVector({0.3, 0.7}), flat, 3, 5.0) == WeightVector({0.3, 0.7}));
  const Matrix p = rows({{10, 10}, {9, 10}, {8, 10}, {7, 10}, {6, 10}});
  const auto r = rmr_update(WeightVector::uniform(2), p, 5, 5.0);
  CHECK(r[0] > 0.5);
  CHECK_ERRC(rmr_update(WeightVector::uniform(2), p, 6, 5.0), Errc::InsufficientHistory);
}

TEST_CASE("corn") {
  SUBCASE("no match gives uniform") {
    const Matrix rel = rows({{1.0, 1.5}, {2.0, 1.0}});
    CHECK(corn_weights(rel, 1, 0.1) == WeightVector::uniform(2));
  }
  SUBCASE("single matched day concentrates") {
    const Matrix rel = rows({{1.5, 1.0}, {2.0, 1.0}});
    const auto w = corn_weights(rel, 1, 0.1);
    CHECK(w[0] > 1.0 - 1e-3);
  }
  SUBCASE("symmetric matched set stays uniform") {
    const auto w = log_optimal_weights({{2.0, 1.0, 1.5}, {1.0, 1.5, 2.0}, {1.5, 2.0, 1.0}}, 3);
    for (double v : w) CHECK(std::abs(v - 1.0 / 3.0) < 1e-6);
  }
  SUBCASE("short history") { CHECK_ERRC(corn_weights(rows({{1.0, 1.0}}), 1, 0.1), Errc::InsufficientHistory); }
  SUBCASE("log-optimal beats uniform on its samples") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.9, 1.15);
    std::vector<std::vector<double>> samples(30, std::vector<double>(4));
    for (auto& s : samples)
      for (auto& v : s) v = u(rng);
    const auto w = log_optimal_weights(samples, 4);
    auto growth = [&](std::span<const double> a) {
      double g = 0.0;
      for (const auto& s : samples) g += std::log(a[0] * s[0] + a[1] * s[1] + a[2] * s[2] + a[3] * s[3]);
      return g;
    };
    CHECK(growth(w.values()) >= growth(WeightVector::uniform(4).values()));
  }
}

TEST_CASE("updates stay on the simplex on random streams") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.7, 1.4);
  std::uniform_real_distribution<double> eps(0.0, 20.0);
  WeightVector eg = WeightVector::uniform(5), ol = eg, pa = eg, rm = eg;
  Matrix prices(6, 5, 1.0);
  for (int step = 0; step < 10000; ++step) {
    std::vector<double> x(5);
    for (auto& v : x) v = u(rng);
    for (std::size_t r = 0; r + 1 < prices.rows(); ++r)
      for (std::size_t i = 0; i < 5; ++i) prices(r, i) = prices(r + 1, i);
    for (std::size_t i = 0; i < 5; ++i) prices(5, i) = prices(4, i) * x[i];
    eg = eg_update(eg, x, 0.05 + step % 3);
    ol = olmar_update(ol, prices, 6, eps(rng));
    pa = pamr_update(pa, x, eps(rng) / 10.0);
    if (step % 10 == 0) rm = rmr_update(rm, prices, 5, eps(rng));
    REQUIRE(WeightVector::is_valid(eg.values()));
    REQUIRE(WeightVector::is_valid(ol.values()));
    REQUIRE(WeightVector::is_valid(pa.values()));
    REQUIRE(WeightVector::is_valid(rm.values()));
  }
}

TEST_CASE("strategies are deterministic and tolerate short history") {
  const auto series = testing::random_walk(40, 4, 6, 0.02);
  for (const auto& name : baseline_names()) {
    auto a = make_strategy(name), b = make_strategy(name);
    CHECK(a->name() == name);
    a->reset(4);
    b->reset(4);
    CHECK(a->decide(series, 0) == WeightVector::uniform(4));
    b->decide(series, 0);
    for (std::size_t t = 1; t < 40; ++t) {
      const auto wa = a->decide(series, t);
      CHECK(WeightVector::is_valid(wa.values()));
      CHECK(wa == b->decide(series, t));
    }
    a->reset(4);
    CHECK(a->decide(series, 5) == WeightVector::uniform(4));
  }
  CHECK_ERRC(make_strategy("eiie"), Errc::InvalidConfig);
  StrategyParams bad;
  bad.olmar_window = 1;
  CHECK_ERRC(make_strategy("olmar", bad), Errc::InvalidConfig);
}

TEST_CASE("strategies read only past prices") {
  auto base = testing::random_walk(40, 3, 7, 0.02);
  auto changed = base;
  for (std::size_t i = 0; i < 3; ++i) changed.close(30, i) *= 1.5;
  for (const auto& name : baseline_names()) {
    auto a = make_strategy(name), b = make_strategy(name);
    a->reset(3);
    b->reset(3);
    for (std::size_t t = 0; t < 30; ++t) CHECK(a->decide(base, t) == b->decide(changed, t));
  }
}
