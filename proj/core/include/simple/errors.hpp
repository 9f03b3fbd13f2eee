#pragma once

#include <stdexcept>
#include <string>

namespace simple {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor dimensions do not line up (both shapes are reported in the message).
struct ShapeError : Error {
  using Error::Error;
};

// A numeric domain violation: non-finite values, arguments outside their
// documented range.
struct ValueError : Error {
  using Error::Error;
};

// Invalid or infeasible configuration (bad hyperparameter, impossible split,
// non-integral conv output size).
struct ConfigError : Error {
  using Error::Error;
};

// API misuse: backward on a non-scalar, gradient lookup for a detached
// tensor, mixing tensors from two tapes.
struct ContractError : Error {
  using Error::Error;
};

// File could not be opened or read; the message names the offending path.
struct IoError : Error {
  using Error::Error;
};

// File was readable but its contents are malformed.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace simple
