#pragma once

#include <stdexcept>
#include <string>

namespace riflex {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or mismatched rotary dimensions: odd d', vector length mismatches,
/// degenerate d' = 2 where a formula is undefined.
struct DimensionError : Error {
  using Error::Error;
};

/// Parameter values outside their domain: non-positive base, alpha >= beta,
/// indices out of range, negative positions.
struct ValueError : Error {
  using Error::Error;
};

/// Configuration file problems: JSON parse failures and schema violations.
struct ConfigError : Error {
  using Error::Error;
};

/// Frame decoding problems and degenerate data inputs.
struct DataError : Error {
  using Error::Error;
};

/// A repetition scan covered its whole probe range without finding one.
struct NoAliasError : DataError {
  using DataError::DataError;
};

}  // namespace riflex
