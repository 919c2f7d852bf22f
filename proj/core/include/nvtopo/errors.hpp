#pragma once

#include <stdexcept>
#include <string>

namespace nvtopo {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (non-Hermitian input, invalid
// density matrix, aliasing, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// The quantity is ill-defined because the parameters sit on the phase
// boundary (gap closed, Pfaffian vanishes).
class CriticalPointError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nvtopo
