#pragma once

#include <stdexcept>
#include <string>

namespace mmorder {

/// Broad classes of failure. The CLI maps these onto its exit codes.
enum class ErrorKind {
  domain,      ///< argument outside a parameter domain, infeasible moment
  input,       ///< malformed user input (files, grids, flags)
  numeric,     ///< internal numeric failure (non-convergence, inconsistency)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class CatalogError : public Error {
 public:
  explicit CatalogError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::input, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Adaptive quadrature gave up before reaching its tolerance.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, double achieved_error)
      : NumericError(what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

/// A target moment lies outside the attainable range m(Theta).
class OutOfRange : public DomainError {
 public:
  OutOfRange(const std::string& what, double lower, double upper)
      : DomainError(what), lower_(lower), upper_(upper) {}

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

/// The empirical moment of a sample cannot be matched by any parameter.
class EstimationInfeasible : public OutOfRange {
 public:
  using OutOfRange::OutOfRange;
};

/// Too many Monte Carlo replicates were infeasible for the result to mean anything.
class ExperimentInvalid : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace mmorder
