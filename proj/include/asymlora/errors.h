#pragma once

#include <stdexcept>
#include <string>

namespace asymlora {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad dimensions, broken invariants, malformed config.
class ValidationError : public Error {
public:
  using Error::Error;
};

class DimensionError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Numerical failure (singular systems, divergent training).
class NumericalError : public Error {
public:
  using Error::Error;
};

class SingularityError : public NumericalError {
public:
  SingularityError(const std::string &what, double condition_number)
      : NumericalError(what), condition_number_(condition_number) {}

  double condition_number() const { return condition_number_; }

private:
  double condition_number_;
};

class DivergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace asymlora
