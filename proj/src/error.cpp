#include "dkrc/error.hpp"

namespace dkrc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotStabilizable: return "NotStabilizable";
    case ErrorKind::SingularR: return "SingularR";
    case ErrorKind::BadDims: return "BadDims";
    case ErrorKind::BadFractions: return "BadFractions";
    case ErrorKind::DegenerateBatch: return "DegenerateBatch";
    case ErrorKind::DegenerateLift: return "DegenerateLift";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::PolicyFailure: return "PolicyFailure";
    case ErrorKind::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorKind::Io: return "Io";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace dkrc
