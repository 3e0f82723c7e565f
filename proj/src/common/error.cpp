#include "common/error.hpp"

namespace gameharness {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownGame: return "UnknownGame";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IllegalAction: return "IllegalAction";
    case ErrorCode::TerminalState: return "TerminalState";
    case ErrorCode::WrongGame: return "WrongGame";
    case ErrorCode::UnsupportedSize: return "UnsupportedSize";
    case ErrorCode::NonMonotonicTurn: return "NonMonotonicTurn";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::NoMoveLine: return "NoMoveLine";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::Forfeit: return "Forfeit";
    case ErrorCode::Backend: return "BackendError";
    case ErrorCode::MalformedCandidate: return "MalformedCandidate";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::ZeroVarianceDiffs: return "ZeroVarianceDiffs";
    case ErrorCode::ZeroVarianceBaseline: return "ZeroVarianceBaseline";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Usage: return "UsageError";
  }
  return "Unknown";
}

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::network: return "network";
    case BackendErrorKind::http_status: return "http_status";
    case BackendErrorKind::exhausted_script: return "exhausted_script";
    case BackendErrorKind::rate_limited_final: return "rate_limited_final";
    case BackendErrorKind::missing_credential: return "missing_credential";
    case BackendErrorKind::bad_response: return "bad_response";
  }
  return "unknown";
}

}  // namespace gameharness
