#include "triad/error.hpp"

namespace triad {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonPositivePrice: return "NonPositivePrice";
    case Errc::UnparseableDate: return "UnparseableDate";
    case Errc::EmptyIntersection: return "EmptyIntersection";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::InvalidRegime: return "InvalidRegime";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::ZeroVolatility: return "ZeroVolatility";
    case Errc::DegenerateSamples: return "DegenerateSamples";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::StaleTape: return "StaleTape";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonPositiveGrowth: return "NonPositiveGrowth";
    case Errc::InsufficientBuffer: return "InsufficientBuffer";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::EpisodeFinished: return "EpisodeFinished";
    case Errc::InvalidAction: return "InvalidAction";
    case Errc::DataSplitTooSmall: return "DataSplitTooSmall";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::BadCheckpoint: return "BadCheckpoint";
    case Errc::MalformedRow: return "MalformedRow";
  }
  return "Unknown";
}

bool is_data_error(Errc code) {
  switch (code) {
    case Errc::MissingColumn:
    case Errc::NonPositivePrice:
    case Errc::UnparseableDate:
    case Errc::EmptyIntersection:
    case Errc::SeriesTooShort:
    case Errc::DataSplitTooSmall:
    case Errc::InsufficientData:
    case Errc::InsufficientHistory:
    case Errc::IoFailure:
    case Errc::BadCheckpoint:
    case Errc::MalformedRow:
      return true;
    default:
      return false;
  }
}

}  // namespace triad
