#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace latent {

// Machine-readable failure categories. The CLI prints them as
// "latent: error[<code>]: <message>".
enum class ErrorCode {
  kIo,
  kParse,
  kInvalidArgument,
  kInsufficientTokens,
  kNotEnoughPoints,
  kDomain,
  kDegenerateInput,
  kEmptyInput,
  kUnembeddable,
  kMismatchedRuns,
  kUnknownAlgorithm,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace latent
