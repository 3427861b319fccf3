#pragma once

#include <stdexcept>
#include <string>

namespace cf {

// Base for every error this library raises. The CLI maps subclasses to
// distinct exit codes (see tools/).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration (bad learning rate, empty stage list,
// non-increasing chunk sizes, over-requested split sizes, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape or dimension mismatch between tensors / sequences.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required, NaN losses, degenerate
// attention rows.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Problems reading or interpreting input data (missing columns, bad CSV).
class IngestionError : public Error {
 public:
  using Error::Error;
};

// A value could not be encoded against the frozen schema.
class EncodingError : public Error {
 public:
  using Error::Error;
};

// Checkpoint / manifest / schema version or hash mismatch.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// Metric undefined for the given inputs (e.g. AUC with a single class).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Internal contract violation (caller broke a precondition that is supposed
// to be guaranteed upstream).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace cf
