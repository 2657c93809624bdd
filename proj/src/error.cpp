#include "veclstm/error.hpp"

namespace veclstm {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::TruncatedHeader: return "TruncatedHeader";
    case ErrorKind::InvertedSpan: return "InvertedSpan";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::StaleCache: return "StaleCache";
    case ErrorKind::InputTooShort: return "InputTooShort";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NotFitted: return "NotFitted";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptyClassSet: return "EmptyClassSet";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::ConnectionFailed: return "ConnectionFailed";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::StorageError: return "StorageError";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

MalformedLine::MalformedLine(std::size_t line_no, const std::string& detail)
    : Error(ErrorKind::MalformedLine, "line " + std::to_string(line_no) + ": " + detail),
      line_no_(line_no) {}

}  // namespace veclstm
