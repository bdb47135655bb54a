#pragma once

#include <stdexcept>
#include <string>

namespace thermoguard {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/array dimensions do not line up (channel counts, array lengths).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input too small to produce any output (e.g. pooling a 1-pixel image).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A scalar value is outside its valid domain (negative range, bad FOV, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content; the message carries the byte offset or line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem read/write failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given data (e.g. no ground truth at all).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace thermoguard
