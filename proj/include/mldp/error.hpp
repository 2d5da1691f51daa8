#pragma once

#include <stdexcept>
#include <string>

namespace mldp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with what the caller handed us: files, configs, shapes, indices.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class ShapeError : public InputError {
 public:
  using InputError::InputError;
};

class RangeError : public InputError {
 public:
  using InputError::InputError;
};

// Unreadable or malformed data files and cells.
class DataError : public InputError {
 public:
  using InputError::InputError;
};

// Non-finite values, failed factorizations, underflowed probability vectors.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Internal invariant violations and calls on objects in the wrong state.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace mldp
