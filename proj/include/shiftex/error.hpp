#pragma once

#include <stdexcept>
#include <string>

namespace shiftex {

// Error categories map one-to-one onto CLI exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input shape, out-of-range parameter, missing column, ...
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A cell in an input file could not be turned into a finite number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : Error(what), row_(row), column_(std::move(column)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// Solver or fit failed for numerical reasons.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Sinkhorn hit its iteration budget. residual is the max relative marginal violation.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : NumericalError(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Source and target coincide, so there is no shift to explain.
class NothingToExplain : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The exact solver was asked for a problem above OtConfig::exact_size_limit.
class SizeLimitExceeded : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace shiftex
