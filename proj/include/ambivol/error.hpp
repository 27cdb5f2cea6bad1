#pragma once

#include <stdexcept>
#include <string>

namespace ambivol {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed inputs: bad grids, empty families, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A scenario with non-finite values or values outside its ambiguity set.
class InvalidScenario : public Error {
 public:
  using Error::Error;
};

// Function evaluated outside its domain (e.g. c^alpha with c <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Matrix that must be inverted is singular.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// Solver configuration cannot work (e.g. explicit scheme violating CFL).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Iteration failed to converge, root bracketing failed, etc.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ambivol
