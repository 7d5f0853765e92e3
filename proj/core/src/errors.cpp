#include "satsplat/errors.hpp"

namespace satsplat {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::kNumerical: return "NumericalError";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kRange: return "RangeError";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kMismatchedViews: return "MismatchedViews";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kMissingDetections: return "MissingDetections";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

ParseError::ParseError(const std::string& message, std::uint64_t byte_offset)
    : Error(ErrorKind::kParse,
            message + " (at byte offset " + std::to_string(byte_offset) + ")"),
      byte_offset_(byte_offset) {}

ParseError::ParseError(const std::string& message, const std::string& file,
                       int line)
    : Error(ErrorKind::kParse,
            file + ":" + std::to_string(line) + ": " + message),
      file_(file),
      line_(line) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kParse:
    case ErrorKind::kUnsupportedFormat:
    case ErrorKind::kRange:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kMismatchedViews:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kMissingDetections:
      return 3;
    case ErrorKind::kDegenerateGeometry:
    case ErrorKind::kNumerical:
      return 4;
  }
  return 1;
}

}  // namespace satsplat
