#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mnri {

enum class ErrorCode {
  InvalidArgument,
  NotPositiveDefinite,
  NoConvergence,
  IntegrationFailure,
  Separation,
  RankDeficient,
  DegenerateOutcome,
  AllTies,
  TooFewDistinctValues,
  DataError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `model()` names the nested model
/// ("expanded", "base", "constant") when a fit failed, and is empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string model = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& model() const noexcept { return model_; }

 private:
  ErrorCode code_;
  std::string model_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace mnri
