#pragma once

#include <stdexcept>
#include <string>

namespace vitalrr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument (scenario, window, loss weights, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text payload (bad magic, truncation, version).
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Tensor shapes that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input is shorter than an operation requires.
class TooShortError : public Error {
 public:
  TooShortError(const std::string& what, double duration_s)
      : Error(what), duration_s_(duration_s) {}
  double duration_s() const { return duration_s_; }

 private:
  double duration_s_;
};

/// No usable spectral peak inside the respiration band.
class NoPeakError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace vitalrr
