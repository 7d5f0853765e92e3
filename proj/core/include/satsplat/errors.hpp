#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace satsplat {

enum class ErrorKind {
  kDegenerateGeometry,
  kParse,
  kUnsupportedFormat,
  kNumerical,
  kIo,
  kRange,
  kDimensionMismatch,
  kMismatchedViews,
  kConfig,
  kMissingDetections,
};

const char* to_string(ErrorKind kind);

// Base of every error thrown by the library. The kind selects the CLI exit
// code; the stage is filled in by the pipeline when the error crosses a
// stage boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }
  const std::string& stage() const { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  ErrorKind kind_;
  std::string stage_;
};

class DegenerateGeometry : public Error {
 public:
  explicit DegenerateGeometry(const std::string& message)
      : Error(ErrorKind::kDegenerateGeometry, message) {}
};

class ParseError : public Error {
 public:
  // Binary formats report a byte offset.
  ParseError(const std::string& message, std::uint64_t byte_offset);
  // Text formats report file and 1-based line number.
  ParseError(const std::string& message, const std::string& file, int line);

  std::uint64_t byte_offset() const { return byte_offset_; }
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::uint64_t byte_offset_ = 0;
  std::string file_;
  int line_ = 0;
};

class UnsupportedFormat : public Error {
 public:
  explicit UnsupportedFormat(const std::string& message)
      : Error(ErrorKind::kUnsupportedFormat, message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error(ErrorKind::kNumerical, message) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::kIo, message), subject_(std::move(subject)) {}
  // Pose id or path the failure is attached to.
  const std::string& subject() const { return subject_; }

 private:
  std::string subject_;
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& message)
      : Error(ErrorKind::kRange, message) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message)
      : Error(ErrorKind::kDimensionMismatch, message) {}
};

class MismatchedViews : public Error {
 public:
  explicit MismatchedViews(const std::string& message)
      : Error(ErrorKind::kMismatchedViews, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::kConfig, message) {}
};

class MissingDetections : public Error {
 public:
  MissingDetections(const std::string& message, std::vector<std::string> ids)
      : Error(ErrorKind::kMissingDetections, message), ids_(std::move(ids)) {}
  const std::vector<std::string>& view_ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// CLI exit codes: 0 success, 2 config error, 3 missing inputs, 4 numerical.
int exit_code_for(ErrorKind kind);

}  // namespace satsplat
