#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace biwhiten {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base class for all recoverable failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad parameter, bad domain).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The zero pattern of the matrix makes scaling factors impossible
// (zero rows/columns, failed existence requirements, block too small).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Sinkhorn iteration hit the iteration cap before meeting the tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual, std::int64_t iterations)
      : Error(what), best_residual(best_residual), iterations(iterations) {}
  double best_residual;
  std::int64_t iterations;
};

// File ingestion / serialization failure; message carries location info.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace biwhiten
