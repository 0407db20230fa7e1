#include "resurgence/errors.hpp"

#include <cmath>

namespace rlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::AmbientMismatch: return "AmbientMismatch";
    case ErrorCode::InfeasibleOverlap: return "InfeasibleOverlap";
    case ErrorCode::BadAlpha: return "BadAlpha";
    case ErrorCode::BadParam: return "BadParam";
    case ErrorCode::BadVector: return "BadVector";
    case ErrorCode::SingularEdit: return "SingularEdit";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::DegenerateCurvature: return "DegenerateCurvature";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
  }
  return "Unknown";
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0) || !std::isfinite(alpha))
    throw Error(ErrorCode::BadAlpha, "alpha must lie in (0, 1], got " + std::to_string(alpha));
}

}  // namespace rlab
