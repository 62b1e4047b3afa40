#pragma once

#include <stdexcept>
#include <string>

namespace dualcache {

enum class ErrorKind {
  BadMagic,
  MalformedHeader,
  TruncatedFile,
  DimensionMismatch,
  NonFiniteValue,
  NormViolation,
  ZeroNormRow,
  LabelOutOfRange,
  DuplicateClassName,
  InsufficientShots,
  SingleClass,
  EmptyShots,
  IndexOutOfRange,
  OddDimension,
  TemplateCountMismatch,
  EmptyList,
  InvalidArgument,
  IoError,
  ManifestError,
};

const char* to_string(ErrorKind kind) noexcept;

// All library failures surface as this type; kind() is stable for callers that
// branch on the failure category, what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dualcache
