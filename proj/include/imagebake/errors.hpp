#pragma once

#include <stdexcept>
#include <string>

namespace imagebake {

enum class ErrorCode {
  SyntaxError,
  DuplicateTable,
  UnknownTable,
  UnknownColumn,
  TypeMismatch,
  DuplicateKey,
  InvalidStatement,
  InvalidTimestamp,
  StorageError,
  AlreadyScheduled,
  InvalidDump,
  DigestMismatch,
  InvalidConfig,
  MissingLayer,
  ImageVerificationFailed,
  NotReady,
  AlreadyTerminated,
  NoReplicasAvailable,
  WriteRejected,
  UnknownTicket,
  InfeasibleStrategy,
  LaunchFailed,
  ConfigInvalid,
  Precondition,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateTable: return "DuplicateTable";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::InvalidStatement: return "InvalidStatement";
    case ErrorCode::InvalidTimestamp: return "InvalidTimestamp";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::AlreadyScheduled: return "AlreadyScheduled";
    case ErrorCode::InvalidDump: return "InvalidDump";
    case ErrorCode::DigestMismatch: return "DigestMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingLayer: return "MissingLayer";
    case ErrorCode::ImageVerificationFailed: return "ImageVerificationFailed";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::AlreadyTerminated: return "AlreadyTerminated";
    case ErrorCode::NoReplicasAvailable: return "NoReplicasAvailable";
    case ErrorCode::WriteRejected: return "WriteRejected";
    case ErrorCode::UnknownTicket: return "UnknownTicket";
    case ErrorCode::InfeasibleStrategy: return "InfeasibleStrategy";
    case ErrorCode::LaunchFailed: return "LaunchFailed";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Precondition: return "Precondition";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Grammar or statement-level failure with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, int line, int column, std::string message)
      : Error(code, std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace imagebake
