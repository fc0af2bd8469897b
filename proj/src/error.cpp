#include "ifpca/error.hpp"

namespace ifpca {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "Usage";
    case ErrorCode::kData: return "Data";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kZeroSpread: return "ZeroSpread";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kNoEligibleIndex: return "NoEligibleIndex";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kUnknownExperiment: return "UnknownExperiment";
  }
  return "Unknown";
}

}  // namespace ifpca
