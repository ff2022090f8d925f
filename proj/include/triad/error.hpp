#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triad {

enum class Errc {
  MissingColumn,
  NonPositivePrice,
  UnparseableDate,
  EmptyIntersection,
  IndexOutOfRange,
  InsufficientHistory,
  InvalidRegime,
  DimensionMismatch,
  InsufficientData,
  ZeroVolatility,
  DegenerateSamples,
  NonFiniteInput,
  StaleTape,
  ShapeMismatch,
  NonPositiveGrowth,
  InsufficientBuffer,
  BudgetTooSmall,
  EmptyBatch,
  SeriesTooShort,
  EpisodeFinished,
  InvalidAction,
  DataSplitTooSmall,
  IoFailure,
  InvalidConfig,
  BadCheckpoint,
  MalformedRow,
};

std::string_view to_string(Errc code);

/// True for errors caused by the input data rather than the run configuration.
bool is_data_error(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace triad
