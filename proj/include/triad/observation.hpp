#pragma once

#include <cstddef>
#include <vector>

namespace triad {

/// Length of the market vector v_m: [trend, event intensity, volatility ratio].
inline constexpr std::size_t kMarketVectorSize = 3;

/// Agent-facing market state: a W x N window of price relatives (day-major,
/// flattened), the current holdings, and the latest market vector.
struct Observation {
  std::vector<double> features;
  std::size_t day = 0;

  bool operator==(const Observation&) const = default;
};

}  // namespace triad
