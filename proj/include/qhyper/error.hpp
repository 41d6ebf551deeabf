#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qhyper {

/// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments does not hold (bad context, unbalanced
/// parameters, malformed spins).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside the convergence domain of a series.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The configured product truncation cannot certify the tail bound.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A denominator vanishes (or a pole sits on the integration contour).
class PoleError : public Error {
 public:
  PoleError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A bilateral sum shows no decay within the configured cutoff.
class TailDivergenceError : public Error {
 public:
  using Error::Error;
};

/// An integrand produced a non-finite value at a quadrature node.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// Calibration of a convention flag found no passing assignment.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace qhyper
