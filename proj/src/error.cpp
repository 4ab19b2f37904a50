#include "latent/error.hpp"

namespace latent {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInsufficientTokens: return "insufficient_tokens";
    case ErrorCode::kNotEnoughPoints: return "not_enough_points";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kUnembeddable: return "unembeddable";
    case ErrorCode::kMismatchedRuns: return "mismatched_runs";
    case ErrorCode::kUnknownAlgorithm: return "unknown_algorithm";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace latent
