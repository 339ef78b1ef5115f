#include "mnri/error.hpp"

namespace mnri {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateOutcome: return "DegenerateOutcome";
    case ErrorCode::AllTies: return "AllTies";
    case ErrorCode::TooFewDistinctValues: return "TooFewDistinctValues";
    case ErrorCode::DataError: return "DataError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, std::string model)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code),
      model_(std::move(model)) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mnri
