#include "advseg/core/error.hpp"

namespace advseg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidLabel: return "invalid-label";
    case ErrorKind::InvalidThreshold: return "invalid-threshold";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::InputTooSmall: return "input-too-small";
    case ErrorKind::ConfigMismatch: return "config-mismatch";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Schedule: return "schedule";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Checkpoint: return "checkpoint";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace advseg
