#pragma once

#include <stdexcept>
#include <string>

namespace flowlab {

/// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: grid mismatch, empty path, non-divisible ladder.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (alpha, H, times).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Covariance matrix not positive definite after regularization.
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, std::size_t minor)
      : Error(what), minor_(minor) {}
  std::size_t leading_minor() const noexcept { return minor_; }

 private:
  std::size_t minor_;
};

/// Circulant embedding with negative eigenvalues even after enlarging.
class EmbeddingError : public Error {
 public:
  using Error::Error;
};

/// A singular integral that did not stay finite.
class RegularityError : public Error {
 public:
  using Error::Error;
};

/// Solver state crossed the blow-up guard.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowlab
