#include <cmath>

#include "support.hpp"
#include "triad/trading_env.hpp"

using namespace triad;

TEST_CASE("reset") {
  const auto s = testing::random_walk(30, 4, 1);
  TradingEnv env(s, {.window = 5});
  const Observation o = env.reset();
  CHECK(env.state().holdings == WeightVector::uniform(4));
  CHECK(env.state().capital == 1.0);
  CHECK(env.state().day == 5);
  CHECK(o.day == 5);
  CHECK(o.features.size() == 5 * 4 + 4 + 3);
  CHECK(env.reset() == o);
  CHECK(env.episode_length() == 30 - 1 - 5);

  // window rows are relatives of days 1..5 in order
  for (std::size_t d = 0; d < 5; ++d)
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(o.features[d * 4 + i] == s.close(d + 1, i) / s.close(d, i));
}

TEST_CASE("observation length formula") {
  const auto s = testing::random_walk(10, 2, 2);
  TradingEnv env(s, {.window = 3});
  CHECK(env.reset().features.size() == 11);
  CHECK(observation_size(3, 2) == 11);
  CHECK(env.observation_size() == 11);
}

TEST_CASE("series too short and bad config") {
  const auto s = testing::random_walk(6, 2, 3);
  CHECK_ERRC(TradingEnv(s, {.window = 5}), Errc::SeriesTooShort);
  CHECK_NOTHROW(TradingEnv(s, {.window = 4}));
  CHECK_ERRC(TradingEnv(s, {.window = 0}), Errc::InvalidConfig);
  CHECK_ERRC(TradingEnv(s, {.window = 2, .c_tx = -0.1}), Errc::InvalidConfig);
  CHECK_ERRC(TradingEnv(s, {.window = 2, .c_tx = 0.0, .c0 = 0.0}), Errc::InvalidConfig);
}

TEST_CASE("step: examples") {
  SUBCASE("doubling asset") {
    const auto s = testing::panel({{1, 1}, {1, 1}, {2, 1}, {2, 1}});
    TradingEnv env(s, {.window = 1});
    env.reset();
    const auto r = env.step(WeightVector::vertex(2, 0));
    CHECK(r.growth == 2.0);
    CHECK(env.state().capital == 2.0);
  }
  SUBCASE("flat market") {
    const auto s = testing::panel(std::vector<std::vector<double>>(6, {5.0, 7.0, 9.0}));
    TradingEnv env(s, {.window = 2});
    env.reset();
    std::mt19937_64 rng(1);
    while (!env.state().done) CHECK(env.step(WeightVector(testing::random_simplex(3, rng))).growth == 1.0);
  }
  SUBCASE("full rotation under proportional cost") {
    const auto s = testing::panel(std::vector<std::vector<double>>(6, {1.0, 1.0}));
    TradingEnv env(s, {.window = 1, .c_tx = 0.001});
    env.reset();
    CHECK(env.step(WeightVector::vertex(2, 0)).growth == doctest::Approx(1.0 - 0.0005));
    const double before = env.state().capital;
    CHECK(env.step(WeightVector::vertex(2, 1)).growth == doctest::Approx(0.999).epsilon(1e-15));
    CHECK(env.state().cost_paid == doctest::Approx(0.0005 + before * 0.001));
  }
}

TEST_CASE("step: errors and termination") {
  const auto s = testing::random_walk(8, 2, 4);
  TradingEnv env(s, {.window = 3});
  CHECK_ERRC(env.step(WeightVector::uniform(2)), Errc::EpisodeFinished);
  env.reset();
  CHECK_ERRC(env.step(WeightVector::uniform(3)), Errc::InvalidAction);
  std::size_t steps = 0;
  StepResult r;
  do {
    r = env.step(WeightVector::uniform(2));
    ++steps;
    CHECK(r.o_next.day == 3 + steps);
  } while (!r.done);
  CHECK(steps == env.episode_length());
  CHECK_ERRC(env.step(WeightVector::uniform(2)), Errc::EpisodeFinished);
}

TEST_CASE("market vector is appended to observations") {
  const auto s = testing::random_walk(12, 2, 5);
  TradingEnv env(s, {.window = 2});
  env.reset();
  const std::vector<double> vm{-1.0, 0.25, 1.3};
  env.set_market_vector(vm);
  const auto o = env.observe();
  CHECK(std::equal(vm.begin(), vm.end(), o.features.end() - 3));
  CHECK_ERRC(env.set_market_vector(std::vector<double>{1.0}), Errc::DimensionMismatch);
  const auto fresh = env.reset();
  CHECK(std::all_of(fresh.features.end() - 3, fresh.features.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("drifted holdings") {
  const WeightVector h({0.2, 0.3, 0.5});
  const auto same = drifted_holdings(h, std::vector<double>{1.3, 1.3, 1.3});
  for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(h[i]).epsilon(1e-15));
  const auto d = drifted_holdings(WeightVector({0.5, 0.5}), std::vector<double>{2.0, 1.0});
  CHECK(d[0] == doctest::Approx(2.0 / 3.0));
  CHECK(d[1] == doctest::Approx(1.0 / 3.0));
  CHECK_ERRC(drifted_holdings(h, std::vector<double>{1.0}), Errc::DimensionMismatch);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> rel(0.5, 1.5);
  for (int trial = 0; trial < 500; ++trial) {
    const WeightVector w(testing::random_simplex(6, rng));
    std::vector<double> r(6);
    for (auto& v : r) v = rel(rng);
    const auto out = drifted_holdings(w, r);
    double sum = 0.0;
    for (double v : out) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("capital accounting over an episode") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = testing::random_walk(80, 4, 100 + trial, 0.03);
    TradingEnv env(s, {.window = 5, .c_tx = 0.0, .c0 = 3.0});
    env.reset();
    double product = 1.0;
    while (!env.state().done) {
      const WeightVector a(testing::random_simplex(4, rng));
      const WeightVector copy = a;
      const auto r = env.step(a);
      CHECK(a == copy);
      CHECK(env.state().capital > 0.0);
      CHECK(WeightVector::is_valid(env.state().holdings.values()));
      product *= r.growth;
    }
    CHECK(std::abs(product - env.state().capital / 3.0) / product < 1e-9);
  }
}

TEST_CASE("holdings after a step reflect price drift") {
  const auto s = testing::panel({{1, 1}, {1, 1}, {1, 1}, {1.5, 1}, {1.5, 1}});
  TradingEnv env(s, {.window = 2});
  env.reset();
  const auto r = env.step(WeightVector::uniform(2));
  CHECK(r.growth == doctest::Approx(1.25));
  CHECK(env.state().holdings[0] == doctest::Approx(0.6));
  // holdings appear after the relatives window
  CHECK(r.o_next.features[4] == doctest::Approx(0.6));
  CHECK(env.relatives(3)[0] == 1.5);
  CHECK_ERRC(env.relatives(0), Errc::IndexOutOfRange);
}
