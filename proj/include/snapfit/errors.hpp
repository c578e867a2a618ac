#pragma once

#include <stdexcept>
#include <string>

namespace snapfit {

// Base for all domain errors so the CLI can map them to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric / model errors (CLI exit code 4).
struct NumericError : Error {
  using Error::Error;
};

struct ValueNotALevel : NumericError {
  using NumericError::NumericError;
};
struct InvalidRunCount : NumericError {
  using NumericError::NumericError;
};
struct DegenerateGeometry : NumericError {
  using NumericError::NumericError;
};
struct OutOfDomain : NumericError {
  using NumericError::NumericError;
};
struct SingularSystem : NumericError {
  using NumericError::NumericError;
};
struct RankDeficientDesign : NumericError {
  using NumericError::NumericError;
};
struct ExtrapolationRefused : NumericError {
  using NumericError::NumericError;
};
struct LengthMismatch : NumericError {
  using NumericError::NumericError;
};
struct RunIdMismatch : NumericError {
  using NumericError::NumericError;
};
struct DatasetTooSmall : NumericError {
  using NumericError::NumericError;
};

// I/O failures (CLI exit code 3).
struct IoError : Error {
  using Error::Error;
};

// Bad flags / config (CLI exit code 2).
struct UsageError : Error {
  using Error::Error;
};

}  // namespace snapfit
