#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdroute {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyCalibration,
  kEmptySet,
  kUnknownLandmark,
  kUnknownWorker,
  kEmptyGraph,
  kTooLarge,
  kInfeasible,
  kNotDiscriminative,
  kInvalidTrace,
  kDimensionMismatch,
  kDivergence,
  kNoCandidates,
  kNotAssigned,
  kWrongQuestion,
  kTaskClosed,
  kUnresolvable,
  kNotFound,
  kParse,
  kStorage,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (CLI, HTTP layer) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace crowdroute
