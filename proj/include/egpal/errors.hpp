#pragma once

#include <stdexcept>
#include <string>

namespace egpal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation by the caller.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: failed factorization, non-finite intermediate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Input outside a benchmark's domain box.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed CSV / config / checkpoint content.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace egpal
