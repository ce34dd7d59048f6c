#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pqchain {

// Stable domain error codes. The string form of each code is part of the CLI
// contract (surfaced on stderr) and must not change.
enum class ErrorCode {
  InvalidArgument,
  Malformed,
  DecodeError,
  InvalidState,
  IoError,
  ConfigError,
  CryptoFailure,

  // entropy service
  MissingShare,
  Expired,
  MixedSession,
  ReusedKey,
  AuthFailure,
  Timeout,
  ConfirmationMismatch,
  ReplayDetected,
  SessionNotEstablished,

  // certificates
  LegacyInvalid,
  SubjectMismatch,
  CsrInvalid,

  // did registry
  Unauthorized,
  DuplicateDid,
  NotFound,
  MalformedDid,

  // tunnel
  CertificateRejected,
  SignatureInvalid,
  ConfirmFailed,
  ReplayOrReorder,
  TagInvalid,

  // transactions
  UnregisteredWriter,
  KeyMismatch,
};

constexpr std::string_view code_string(ErrorCode c)
{
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CryptoFailure: return "CryptoFailure";
    case ErrorCode::MissingShare: return "MissingShare";
    case ErrorCode::Expired: return "Expired";
    case ErrorCode::MixedSession: return "MixedSession";
    case ErrorCode::ReusedKey: return "ReusedKey";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ConfirmationMismatch: return "ConfirmationMismatch";
    case ErrorCode::ReplayDetected: return "ReplayDetected";
    case ErrorCode::SessionNotEstablished: return "SessionNotEstablished";
    case ErrorCode::LegacyInvalid: return "LegacyInvalid";
    case ErrorCode::SubjectMismatch: return "SubjectMismatch";
    case ErrorCode::CsrInvalid: return "CsrInvalid";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::DuplicateDid: return "DuplicateDid";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::MalformedDid: return "MalformedDid";
    case ErrorCode::CertificateRejected: return "CertificateRejected";
    case ErrorCode::SignatureInvalid: return "SignatureInvalid";
    case ErrorCode::ConfirmFailed: return "ConfirmFailed";
    case ErrorCode::ReplayOrReorder: return "ReplayOrReorder";
    case ErrorCode::TagInvalid: return "TagInvalid";
    case ErrorCode::UnregisteredWriter: return "UnregisteredWriter";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(code_string(code)) + ": " + what)
    , code_(code)
  {
  }

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

} // namespace pqchain
