#pragma once

#include <stdexcept>

namespace kens {

// Base for all library errors; the CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; message carries the offending line number.
struct ParseError : Error {
  using Error::Error;
};

// Invalid configuration or option value.
struct ConfigError : Error {
  using Error::Error;
};

// Violated call contract (dimension mismatch, unknown entity, ...).
struct ContractError : Error {
  using Error::Error;
};

// Negative sampling exhausted its retry budget.
struct SamplingError : Error {
  using Error::Error;
};

}  // namespace kens
