#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

enum class ErrorCode {
  RankDeficient,
  AmbientMismatch,
  InfeasibleOverlap,
  BadAlpha,
  BadParam,
  BadVector,
  SingularEdit,
  Diverged,
  DegenerateCurvature,
  ConfigError,
  IoError,
  UnknownScenario,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, long index = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  // Step index for Diverged; -1 otherwise.
  long index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  long index_;
};

void require_alpha(double alpha);

}  // namespace rlab
