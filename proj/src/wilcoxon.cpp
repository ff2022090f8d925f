#include <algorithm>
#include <cmath>
#include <numeric>

#include "triad/error.hpp"
#include "triad/metrics.hpp"

namespace triad {
namespace {

constexpr std::size_t kExactLimit = 8;

/// Mid-ranks (1-based) of the pooled sample; also returns sum(t^3 - t) over tie groups.
std::vector<double> mid_ranks(std::span<const double> pooled, double& tie_term) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(pooled.size());
  tie_term = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

// Counts n-subsets of `ranks` whose sum deviates from `center` at least as much as `observed`.
void enumerate(const std::vector<double>& ranks, std::size_t start, std::size_t left, double sum,
               double center, double observed, std::size_t& hits, std::size_t& total) {
  if (left == 0) {
    ++total;
    if (std::abs(sum - center) >= observed - 1e-9) ++hits;
    return;
  }
  for (std::size_t i = start; i + left <= ranks.size(); ++i) {
    enumerate(ranks, i + 1, left - 1, sum + ranks[i], center, observed, hits, total);
  }
}

}  // namespace

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.empty() || b.empty()) throw Error(Errc::InsufficientData, "rank-sum samples must be non-empty");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); })) {
    throw Error(Errc::DegenerateSamples, "all observations are identical");
  }

  double tie_term = 0.0;
  const std::vector<double> ranks = mid_ranks(pooled, tie_term);
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  const double total_n = n + m;

  RankSumResult res;
  res.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double center = n * (total_n + 1.0) / 2.0;
  const double deviation = std::abs(res.statistic - center);

  if (a.size() < kExactLimit && b.size() < kExactLimit) {
    std::size_t hits = 0;
    std::size_t total = 0;
    enumerate(ranks, 0, a.size(), 0.0, center, deviation, hits, total);
    res.p_value = static_cast<double>(hits) / static_cast<double>(total);
    res.exact = true;
  } else {
    const double var = n * m / 12.0 * ((total_n + 1.0) - tie_term / (total_n * (total_n - 1.0)));
    const double z = std::max(0.0, deviation - 0.5) / std::sqrt(var);
    res.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  }
  res.significant = res.p_value < alpha;
  return res;
}

}  // namespace triad
