#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pseudoseg {

enum class ErrorCode {
  MalformedHeader,
  UnsupportedDtype,
  TruncatedPayload,
  UnsupportedMaxval,
  IoFailure,
  DimensionMismatch,
  ShapeMismatch,
  LabelOutOfRange,
  NegativeLabel,
  InvalidArgument,
  MissingInput,
  StageDependencyViolation,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, std::uint64_t byte_offset, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // Set for file-format errors: position in the file where parsing failed.
  std::optional<std::uint64_t> byte_offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace pseudoseg
