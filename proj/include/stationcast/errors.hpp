#pragma once

#include <stdexcept>
#include <string>

namespace stationcast {

// Base error. exit_code() maps onto the CLI contract:
//   2 = usage / input error, 3 = runtime / numeric error.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual int exit_code() const { return 3; }
};

class InputError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

// -- input-class errors -------------------------------------------------

class MissingFileError : public InputError {
 public:
  using InputError::InputError;
};

class MissingColumnError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyFileError : public InputError {
 public:
  using InputError::InputError;
};

class NoStationsRetainedError : public InputError {
 public:
  using InputError::InputError;
};

class WeatherGapError : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateSplitError : public InputError {
 public:
  using InputError::InputError;
};

class WindowTooLargeError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class MissingUpstreamArtifactError : public InputError {
 public:
  using InputError::InputError;
};

class HiddenTooSmallError : public InputError {
 public:
  using InputError::InputError;
};

// -- numeric / runtime errors -------------------------------------------

class ShapeMismatchError : public NumericError {
 public:
  using NumericError::NumericError;
};

class LengthMismatchError : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonFiniteError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ZeroDegreeNodeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class GraphNotRecordedError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DivergedLossError : public NumericError {
 public:
  using NumericError::NumericError;
};

class RankDeficientError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace stationcast
