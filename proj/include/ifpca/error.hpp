#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ifpca {

enum class ErrorCode {
  kUsage,
  kData,
  kIo,
  kZeroVarianceColumn,
  kNoConvergence,
  kZeroSpread,
  kEmptySelection,
  kNoEligibleIndex,
  kInvalidK,
  kKTooLarge,
  kInvalidConfig,
  kUnknownExperiment,
};

const char* to_string(ErrorCode code);

// Every failure the library reports surfaces as an Error; the CLI maps the
// code onto a process exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  // Column or parameter index the error refers to, when there is one.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace ifpca
