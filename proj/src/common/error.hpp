#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gameharness {

enum class ErrorCode {
  UnknownGame,
  InvalidConfig,
  IllegalAction,
  TerminalState,
  WrongGame,
  UnsupportedSize,
  NonMonotonicTurn,
  EmptyBuffer,
  MissingPlaceholder,
  NoMoveLine,
  InvalidAction,
  Forfeit,
  Backend,
  MalformedCandidate,
  TooFewPairs,
  ZeroVarianceDiffs,
  ZeroVarianceBaseline,
  DuplicateRecord,
  KeyMismatch,
  EmptyInput,
  Io,
  Usage,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class BackendErrorKind {
  network,
  http_status,
  exhausted_script,
  rate_limited_final,
  missing_credential,
  bad_response,
};

std::string_view to_string(BackendErrorKind kind);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message, int http_status = 0)
      : Error(ErrorCode::Backend, message), kind_(kind), http_status_(http_status) {}

  BackendErrorKind kind() const noexcept { return kind_; }
  int http_status() const noexcept { return http_status_; }

 private:
  BackendErrorKind kind_;
  int http_status_;
};

}  // namespace gameharness
