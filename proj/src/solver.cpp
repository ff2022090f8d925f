#include "triad/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "triad/error.hpp"

namespace triad {

WeightVector simplex_repair(std::span<const double> raw) {
  if (raw.empty()) throw Error(Errc::DimensionMismatch, "cannot project an empty vector");
  if (!all_finite(raw)) throw Error(Errc::NonFiniteInput, "projection input contains NaN/Inf");
  std::vector<double> u(raw.begin(), raw.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(raw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::max(raw[i] - theta, 0.0);
    sum += out[i];
  }
  // Rounding can leave the sum a few ulps off; renormalize only then.
  if (std::abs(sum - 1.0) > 1e-12) {
    for (double& v : out) v /= sum;
  }
  return WeightVector(std::move(out));
}

DeResult differential_evolution(const Objective& objective, std::size_t dimension, std::size_t budget,
                                std::uint64_t seed, const DeParams& params,
                                std::span<const std::vector<double>> initial, const StopRule& stop) {
  const std::size_t pop = params.population;
  if (pop < 4) throw Error(Errc::InvalidConfig, "DE population must be >= 4");
  if (budget < pop) throw Error(Errc::BudgetTooSmall, "budget smaller than the DE population");
  if (dimension == 0) throw Error(Errc::DimensionMismatch, "DE dimension must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<std::size_t> pick(0, pop - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, dimension - 1);

  std::vector<std::vector<double>> x(pop);
  std::vector<double> fx(pop);
  for (std::size_t i = 0; i < pop; ++i) {
    if (i < initial.size()) {
      if (initial[i].size() != dimension) throw Error(Errc::DimensionMismatch, "seed point has wrong dimension");
      x[i] = initial[i];
    } else {
      // Uniform on the simplex: normalized exponentials.
      std::vector<double> p(dimension);
      double s = 0.0;
      for (double& v : p) s += (v = expo(rng));
      for (double& v : p) v /= s;
      x[i] = std::move(p);
    }
  }

  DeResult res;
  res.trace.reserve(budget);
  std::size_t best = 0;
  auto record = [&](std::size_t i) {
    ++res.evaluations;
    if (res.evaluations == 1 || fx[i] < fx[best]) {
      best = i;
      res.trace.push_back(fx[i]);
      return stop && stop(x[best], fx[best]);
    }
    res.trace.push_back(fx[best]);
    return false;
  };

  for (std::size_t i = 0; i < pop; ++i) {
    fx[i] = objective(x[i]);
    if (record(i)) {
      res.stopped_early = true;
      break;
    }
  }

  std::vector<std::vector<double>> trials(pop, std::vector<double>(dimension));
  while (!res.stopped_early && res.evaluations < budget) {
    for (std::size_t i = 0; i < pop; ++i) {
      std::size_t r1, r2, r3;
      do r1 = pick(rng); while (r1 == i);
      do r2 = pick(rng); while (r2 == i || r2 == r1);
      do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t jrand = pick_dim(rng);
      std::vector<double> raw(dimension);
      for (std::size_t j = 0; j < dimension; ++j) {
        const bool cross = unit(rng) < params.crossover || j == jrand;
        raw[j] = cross ? x[r1][j] + params.mutation * (x[r2][j] - x[r3][j]) : x[i][j];
      }
      trials[i] = simplex_repair(raw).vec();
    }
    for (std::size_t i = 0; i < pop && res.evaluations < budget; ++i) {
      const double f = objective(trials[i]);
      if (f <= fx[i]) {
        x[i] = trials[i];
        fx[i] = f;
      }
      if (record(i)) {
        res.stopped_early = true;
        break;
      }
    }
  }
  res.best = x[best];
  res.value = fx[best];
  return res;
}

void SolverConfig::validate() const {
  if (optimizer != "de") throw Error(Errc::InvalidConfig, "unsupported optimizer '" + optimizer + "'");
  if (de.population < 4) throw Error(Errc::InvalidConfig, "DE population must be >= 4");
  if (!(de.mutation > 0.0 && de.mutation <= 2.0)) throw Error(Errc::InvalidConfig, "DE F must lie in (0, 2]");
  if (!(de.crossover >= 0.0 && de.crossover <= 1.0)) throw Error(Errc::InvalidConfig, "DE CR must lie in [0, 1]");
  if (budget < de.population) throw Error(Errc::InvalidConfig, "solver budget smaller than population");
  if (!(mu >= 0.0)) throw Error(Errc::InvalidConfig, "mu must be non-negative");
}

double effective_penalty(double mu, std::span<const double> market_vector) {
  if (mu <= 0.0) return 0.0;
  const double trend = market_vector.empty() ? 0.0 : market_vector[0];
  return std::clamp(mu * (1.0 + trend), 0.01, 1.0);
}

SolverResult propose_control(const RiskControlProblem& problem, std::size_t budget, std::uint64_t seed,
                             const SolverConfig& config) {
  const std::size_t n = problem.a_rl.size();
  if (problem.cov.rows() != n || problem.cov.cols() != n) {
    throw Error(Errc::DimensionMismatch, "covariance does not match the action dimension");
  }
  if (!(problem.risk_boundary >= 0.0)) throw Error(Errc::InvalidConfig, "risk boundary must be >= 0");
  if (budget < 1) throw Error(Errc::BudgetTooSmall, "solver budget must be >= 1");

  const RiskForm form = config.risk_form;
  const std::span<const double> a_rl = problem.a_rl.values();
  const double sigma_s = problem.risk_boundary;
  auto risk = [&](std::span<const double> a) { return strategy_risk(a, problem.cov, form); };

  SolverResult res;
  const double rl_risk = risk(a_rl);
  res.evaluations = 1;
  if (rl_risk <= sigma_s) {
    res.a_ctrl.assign(n, 0.0);
    res.a_final = problem.a_rl;
    res.achieved_risk = rl_risk;
    res.feasible = true;
    return res;
  }

  const double mu = effective_penalty(problem.deviation_penalty, problem.market_vector);
  auto deviation = [&](std::span<const double> a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (a[i] - a_rl[i]) * (a[i] - a_rl[i]);
    return std::sqrt(s);
  };
  Objective objective;
  if (config.boundary == BoundaryMode::Hard) {
    objective = [&](std::span<const double> a) { return risk(a) + mu * deviation(a); };
  } else {
    objective = [&](std::span<const double> a) {
      return std::max(0.0, risk(a) - sigma_s) + mu * deviation(a);
    };
  }
  StopRule stop;
  if (config.boundary == BoundaryMode::Hard) {
    stop = [&](std::span<const double> best, double) { return risk(best) <= sigma_s; };
  }

  std::vector<double> point;
  std::size_t used = 0;
  if (n == 1) {
    point = problem.a_rl.vec();
  } else {
    const std::vector<std::vector<double>> seeds{problem.a_rl.vec()};
    const std::size_t de_budget = std::max(budget, config.de.population);
    DeResult de = differential_evolution(objective, n, de_budget, seed, config.de, seeds, stop);
    used = de.evaluations;
    point = std::move(de.best);
    if (de.stopped_early) {
      // Smallest step from a_rl toward the feasible incumbent that keeps sigma_alpha <= sigma_s.
      double lo = 0.0;
      double hi = 1.0;
      std::vector<double> probe(n);
      for (int it = 0; it < 40 && used < de_budget; ++it, ++used) {
        const double mid = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < n; ++i) probe[i] = a_rl[i] + mid * (point[i] - a_rl[i]);
        (risk(probe) <= sigma_s ? hi : lo) = mid;
      }
      for (std::size_t i = 0; i < n; ++i) point[i] = a_rl[i] + hi * (point[i] - a_rl[i]);
    }
  }

  res.a_final = WeightVector::is_valid(point) ? WeightVector(std::move(point)) : simplex_repair(point);
  res.a_ctrl.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.a_ctrl[i] = res.a_final[i] - a_rl[i];
  res.achieved_risk = risk(res.a_final.values());
  res.feasible = res.achieved_risk <= sigma_s;
  res.evaluations += used;
  return res;
}

}  // namespace triad
