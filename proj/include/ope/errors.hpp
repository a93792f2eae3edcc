#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ope {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unsupported family, malformed JSON, unknown registry key.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateMeasureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Raised when a computed off-diagonal recurrence coefficient stops being positive.
class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, std::size_t index)
      : NumericalError(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class SamplingStallError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Two algebraically equal representations disagree beyond tolerance.
class ConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Quadrature refinement hit its cap without converging.
class ResolutionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ope
