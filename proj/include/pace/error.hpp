#pragma once

#include <stdexcept>
#include <string>

namespace pace {

enum class ErrorCode {
  kInvalidArgument,
  kModelMalformed,
  kEmptyModel,
  kDegenerateModel,
  kInvalidSample,
  kInvalidCell,
  kScalingOverflow,
  kSolverLimit,
  kInternalConsistency,
  kBudgetExceeded,
  kInvalidInput,
  kIngestion,
  kUsage,
};

const char* error_code_name(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pace
