// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace oleo {

// Base of every error the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (TSV/JSON rows, binary files).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by a forward or backward computation.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class GradientStateError : public Error {
 public:
  using Error::Error;
};

// Cached artifact does not match the provenance the caller expects.
class StaleArtifactError : public Error {
 public:
  using Error::Error;
};

class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace oleo
