#pragma once

#include <stdexcept>
#include <string>

namespace cellnas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Genome length mismatches and malformed bitstrings.
class CodecError : public Error {
 public:
  using Error::Error;
};

// A value does not fit the field or domain it is meant for.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration documents, domains or strategy settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (e.g. selecting on unevaluated individuals).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Table/log files that cannot be read or parsed.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Worker process communication failures: timeouts, broken pipes, bad lines.
class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

// The worker speaks a protocol version we do not.
class VersionError : public TransportError {
 public:
  using TransportError::TransportError;
};

// Raised when the evaluator error policy says to stop the run.
class RunAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace cellnas
