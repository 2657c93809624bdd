#pragma once

#include <stdexcept>
#include <string>

namespace veclstm {

enum class ErrorKind {
  MalformedLine,
  TruncatedHeader,
  InvertedSpan,
  EmptyDataset,
  EmptyInput,
  LengthMismatch,
  ShapeMismatch,
  NonFinite,
  StaleCache,
  InputTooShort,
  TooFewSamples,
  NotFitted,
  OutOfRange,
  EmptyClassSet,
  Empty,
  EmptyMatrix,
  DegenerateClass,
  ConnectionFailed,
  SchemaMismatch,
  ValidationError,
  StorageError,
  Io,
  Usage,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse errors carry the 1-based line number of the offending row.
class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& detail);

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace veclstm
