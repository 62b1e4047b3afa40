#include "dualcache/error.hpp"

namespace dualcache {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NormViolation: return "NormViolation";
    case ErrorKind::ZeroNormRow: return "ZeroNormRow";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::DuplicateClassName: return "DuplicateClassName";
    case ErrorKind::InsufficientShots: return "InsufficientShots";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::EmptyShots: return "EmptyShots";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::OddDimension: return "OddDimension";
    case ErrorKind::TemplateCountMismatch: return "TemplateCountMismatch";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ManifestError: return "ManifestError";
  }
  return "Unknown";
}

}  // namespace dualcache
