#pragma once

#include <stdexcept>
#include <string>

namespace rgae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset or checkpoint file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid data values (NaN features, etc).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the permitted range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Incompatible matrix shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced or consumed by a numerical routine.
class NumericsError : public Error {
 public:
  using Error::Error;
};

/// Object used in a state it does not support (stale cache, arch mismatch).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Training diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Operator preconditions violated (e.g. no centroid can be formed).
class OperatorError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rgae
