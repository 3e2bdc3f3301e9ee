#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ionfluor {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: out-of-range parameter, malformed configuration.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Parse failure in a configuration text, carrying the 1-based line number.
class ConfigError : public InvalidParameter {
 public:
  ConfigError(int line, const std::string& what)
      : InvalidParameter("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// The physics leaves the model's domain, e.g. no cooling (A- <= A+).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Linear algebra or truncation failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NearPoleError : public NumericalError {
 public:
  NearPoleError(std::complex<double> pole, const std::string& what)
      : NumericalError(what), pole_(pole) {}
  std::complex<double> pole() const noexcept { return pole_; }

 private:
  std::complex<double> pole_;
};

class DefectiveMatrixError : public NumericalError {
 public:
  DefectiveMatrixError(double residual, const std::string& what)
      : NumericalError(what + " (reconstruction residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ionfluor
