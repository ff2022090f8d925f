#include <algorithm>
#include <cmath>
#include <limits>

#include "support.hpp"
#include "triad/solver.hpp"

using namespace triad;

namespace {

// Projection by enumerating supports: for each support S the equality-constrained
// solution is y_S - tau with tau = (sum y_S - 1)/|S|; keep the nearest feasible one.
std::vector<double> kkt_projection(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) sum += y[i], ++k;
    const double tau = (sum - 1.0) / static_cast<double>(k);
    std::vector<double> x(n, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) ok &= (x[i] = y[i] - tau) >= 0.0;
    if (!ok) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += (x[i] - y[i]) * (x[i] - y[i]);
    if (d < best_d) best_d = d, best = x;
  }
  return best;
}

Matrix diag(std::vector<double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

// Minimum of ||Sigma a||_2 over a triangular grid of the 3-simplex (about 10^6 points).
double grid_min_risk(const Matrix& cov) {
  const int steps = 1413;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; i + j <= steps; ++j) {
      const std::vector<double> a{double(i) / steps, double(j) / steps, double(steps - i - j) / steps};
      best = std::min(best, testing::norm_sigma_a(cov, a));
    }
  return best;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("simplex_repair: examples") {
  const std::vector<double> on{0.2, 0.3, 0.5};
  const auto same = simplex_repair(on);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(same[i] - on[i]) < 1e-12);
  CHECK(simplex_repair(std::vector<double>{2.0, 0.0}) == WeightVector::vertex(2, 0));
  const auto neg = simplex_repair(std::vector<double>{-1.0, -1.0, -1.0});
  for (double v : neg) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK_ERRC(simplex_repair(std::vector<double>{1.0, std::nan("")}), Errc::NonFiniteInput);
}

TEST_CASE("simplex_repair: matches support enumeration") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.2, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> y(5);
    for (auto& v : y) v = z(rng);
    const auto got = simplex_repair(y);
    const auto want = kkt_projection(y);
    CHECK(WeightVector::is_valid(got.values()));
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-9);
  }
}

TEST_CASE("differential evolution: examples") {
  SUBCASE("constant objective") {
    const auto r = differential_evolution([](std::span<const double>) { return 3.5; }, 4, 100, 1);
    CHECK(r.value == 3.5);
    CHECK(WeightVector::is_valid(r.best));
  }
  SUBCASE("convex quadratic on the 2-simplex") {
    auto f = [](std::span<const double> a) { return (a[0] - 0.3) * (a[0] - 0.3) + 2 * (a[1] - 0.5) * (a[1] - 0.5); };
    // a = (x, 1-x): minimum at x = 13/30
    const double x = 13.0 / 30.0;
    const double closed = (x - 0.3) * (x - 0.3) + 2 * (0.5 - x) * (0.5 - x);
    const auto r = differential_evolution(f, 2, 5000, 7);
    CHECK(std::abs(r.value - closed) < 1e-4);
    CHECK(r.best[0] == doctest::Approx(x).epsilon(1e-2));
  }
  SUBCASE("determinism") {
    auto f = [](std::span<const double> a) { return std::sin(7 * a[0]) + a[1] * a[2]; };
    const auto a = differential_evolution(f, 3, 400, 42), b = differential_evolution(f, 3, 400, 42);
    CHECK(a.trace == b.trace);
    CHECK(a.best == b.best);
  }
  SUBCASE("errors") {
    auto f = [](std::span<const double>) { return 0.0; };
    CHECK_ERRC(differential_evolution(f, 3, 10, 1), Errc::BudgetTooSmall);
    CHECK_ERRC(differential_evolution(f, 0, 100, 1), Errc::DimensionMismatch);
  }
}

TEST_CASE("differential evolution: best-so-far is monotone and budget-monotone") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix cov = testing::random_psd(5, rng);
    auto f = [&](std::span<const double> a) { return strategy_risk(a, cov); };
    const auto small = differential_evolution(f, 5, 200, trial);
    const auto large = differential_evolution(f, 5, 1000, trial);
    CHECK(small.evaluations == 200);
    CHECK(std::is_sorted(large.trace.rbegin(), large.trace.rend()));
    REQUIRE(large.trace.size() >= small.trace.size());
    CHECK(std::equal(small.trace.begin(), small.trace.end(), large.trace.begin()));
    CHECK(large.value <= small.value);
  }
}

TEST_CASE("differential evolution: seeds and early stop") {
  auto f = [](std::span<const double> a) { return a[0]; };
  const std::vector<std::vector<double>> seeds{{0.0, 1.0}};
  const auto r = differential_evolution(f, 2, 500, 1, {}, seeds,
                                        [](std::span<const double>, double v) { return v <= 0.0; });
  CHECK(r.value == 0.0);
  CHECK(r.stopped_early);
  CHECK(r.evaluations < 500);
}

TEST_CASE("propose_control: no-adjustment contract") {
  const WeightVector a({0.5, 0.3, 0.2});
  SUBCASE("zero covariance") {
    const auto r = propose_control({a, Matrix(3, 3), 0.0, {}, 0.1}, 100, 1);
    CHECK(r.a_ctrl == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(r.feasible);
    CHECK(r.a_final == a);
  }
  SUBCASE("boundary above current risk") {
    const Matrix cov = diag({0.04, 0.01, 0.0001});
    const double risk = strategy_risk(a.values(), cov);
    const auto r = propose_control({a, cov, risk, {}, 0.1}, 100, 1);
    CHECK(r.a_ctrl == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(r.achieved_risk == risk);
  }
  SUBCASE("errors") {
    CHECK_ERRC(propose_control({a, Matrix(2, 2), 0.0, {}, 0.1}, 100, 1), Errc::DimensionMismatch);
    CHECK_ERRC(propose_control({a, diag({1, 1, 1}), 0.0, {}, 0.1}, 0, 1), Errc::BudgetTooSmall);
  }
}

TEST_CASE("propose_control: reaches the minimum-risk point") {
  const Matrix cov = diag({0.04, 0.01, 0.0001});
  const double oracle = grid_min_risk(cov);
  SolverConfig cfg;
  cfg.mu = 0.0;
  const auto r = propose_control({WeightVector::uniform(3), cov, 0.0, {}, 0.0}, 2000, 5, cfg);
  CHECK(r.a_final[2] > 0.95);
  CHECK(r.achieved_risk <= 1.05 * oracle);
  CHECK_FALSE(r.feasible);
}

TEST_CASE("propose_control: invariants on random instances") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> frac(0.1, 0.95);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const Matrix cov = testing::random_psd(n, rng);
    const WeightVector a(testing::random_simplex(n, rng));
    const double rl_risk = strategy_risk(a.values(), cov);
    SolverConfig cfg;
    cfg.boundary = trial % 2 ? BoundaryMode::Hard : BoundaryMode::Target;
    const std::vector<double> vm{trial % 3 - 1.0, 0.1, 1.0};
    const RiskControlProblem p{a, cov, frac(rng) * rl_risk, vm, 0.1};
    const auto r = propose_control(p, 400, trial, cfg);
    CHECK(WeightVector::is_valid(r.a_final.values()));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += r.a_ctrl[i];
      CHECK(std::abs(a[i] + r.a_ctrl[i] - r.a_final[i]) < 1e-12);
    }
    CHECK(std::abs(sum) < 1e-9);
    CHECK(r.achieved_risk <= rl_risk + 1e-15);
    CHECK(r.feasible == (r.achieved_risk <= p.risk_boundary));
    const auto again = propose_control(p, 400, trial, cfg);
    CHECK(again.a_final == r.a_final);
  }
}

TEST_CASE("propose_control: hard boundary stops at the boundary") {
  const Matrix cov = diag({0.04, 0.01, 0.0001});
  const WeightVector a({0.6, 0.3, 0.1});
  const double rl_risk = strategy_risk(a.values(), cov);
  // a small penalty so the boundary is reachable at a lower objective
  const auto r = propose_control({a, cov, 0.5 * rl_risk, {}, 0.01}, 2000, 3);
  CHECK(r.feasible);
  // bisection leaves the incumbent just inside the boundary
  CHECK(r.achieved_risk >= 0.49 * rl_risk);
  CHECK(r.achieved_risk <= 0.5 * rl_risk);
}

TEST_CASE("propose_control: adjustment shrinks as the penalty grows") {
  std::mt19937_64 rng(17);
  SolverConfig cfg;
  cfg.boundary = BoundaryMode::Target;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix cov = testing::random_psd(4, rng, 0.3);
    const WeightVector a(testing::random_simplex(4, rng));
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {0.01, 0.03, 0.1, 0.3, 1.0}) {
      const auto r = propose_control({a, cov, 0.0, {}, mu}, 4000, 1, cfg);
      const double step = l2(r.a_ctrl);
      CHECK(step <= prev + 1e-3);
      prev = step;
    }
  }
  // when the penalty dominates the risk gradient the portfolio is left alone
  const Matrix tiny = testing::random_psd(4, rng, 0.01);
  const WeightVector a(testing::random_simplex(4, rng));
  const auto r = propose_control({a, tiny, 0.0, {}, 1.0}, 2000, 1, cfg);
  CHECK(l2(r.a_ctrl) < 1e-3);
}

TEST_CASE("effective penalty mapping") {
  CHECK(effective_penalty(0.1, {}) == 0.1);
  CHECK(effective_penalty(0.1, std::vector<double>{-1.0, 0.0, 1.0}) == 0.01);
  CHECK(effective_penalty(0.1, std::vector<double>{1.0, 0.0, 1.0}) == doctest::Approx(0.2));
  CHECK(effective_penalty(0.8, std::vector<double>{1.0, 0.0, 1.0}) == 1.0);
  CHECK(effective_penalty(0.0, std::vector<double>{1.0, 0.0, 1.0}) == 0.0);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.optimizer = "pso";
  CHECK_ERRC(c.validate(), Errc::InvalidConfig);
  c = {};
  c.budget = 5;
  CHECK_ERRC(c.validate(), Errc::InvalidConfig);
  c = {};
  c.mu = -1.0;
  CHECK_ERRC(c.validate(), Errc::InvalidConfig);
}
