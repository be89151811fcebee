#pragma once

#include <stdexcept>
#include <string>

namespace advseg {

enum class ErrorKind {
  InvalidLabel,
  InvalidThreshold,
  InvalidConfig,
  InvalidInput,
  Ingestion,
  InputTooSmall,
  ConfigMismatch,
  Shape,
  Schedule,
  Contract,
  Checkpoint,
  UndefinedMetric,
  NonFinite,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers (and the
/// CLI exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace advseg
