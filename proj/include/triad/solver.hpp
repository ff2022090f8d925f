#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "triad/linalg.hpp"
#include "triad/metrics.hpp"
#include "triad/weights.hpp"

namespace triad {

/// Euclidean projection onto the probability simplex (sort-and-threshold).
WeightVector simplex_repair(std::span<const double> raw);

struct DeParams {
  std::size_t population = 20;
  double mutation = 0.8;   // F
  double crossover = 0.9;  // CR
};

struct DeResult {
  std::vector<double> best;
  double value = 0.0;
  std::vector<double> trace;  // best-so-far after each evaluation
  std::size_t evaluations = 0;
  bool stopped_early = false;
};

using Objective = std::function<double(std::span<const double>)>;
/// Called whenever the incumbent improves; returning true stops the search.
using StopRule = std::function<bool(std::span<const double> best, double value)>;

/// DE/rand/1/bin with every candidate projected onto the simplex. Trial
/// vectors of a generation are drawn before any of them is evaluated and
/// selection is resolved by population index, so a larger budget replays
/// the same trajectory and can only improve the incumbent.
DeResult differential_evolution(const Objective& objective, std::size_t dimension, std::size_t budget,
                                std::uint64_t seed, const DeParams& params = {},
                                std::span<const std::vector<double>> initial = {},
                                const StopRule& stop = {});

enum class BoundaryMode {
  Hard,    // stop at the first incumbent with sigma_alpha <= sigma_s, then shrink the move
  Target,  // penalize only the excess max(0, sigma_alpha - sigma_s), full budget
};

struct SolverConfig {
  std::string optimizer = "de";
  DeParams de;
  std::size_t budget = 2000;
  double mu = 0.1;
  BoundaryMode boundary = BoundaryMode::Hard;
  RiskForm risk_form = RiskForm::NormOfProduct;

  void validate() const;
};

struct RiskControlProblem {
  WeightVector a_rl;
  Matrix cov;
  double risk_boundary = 0.0;
  std::vector<double> market_vector;  // [trend, intensity, vol ratio]; may be empty
  double deviation_penalty = 0.1;
};

struct SolverResult {
  std::vector<double> a_ctrl;
  WeightVector a_final;
  double achieved_risk = 0.0;
  bool feasible = false;
  std::size_t evaluations = 0;
};

/// mu scaled by (1 + trend) and clamped to [0.01, 1]; a zero mu stays zero.
double effective_penalty(double mu, std::span<const double> market_vector);

/// Minimizes sigma_alpha(A) + mu_eff * ||A - a_rl||_2 over the simplex with
/// a_rl seeded into the population. Returns a_ctrl = 0 when a_rl already
/// satisfies the risk boundary.
SolverResult propose_control(const RiskControlProblem& problem, std::size_t budget, std::uint64_t seed,
                             const SolverConfig& config = {});

}  // namespace triad
