#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace clic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Malformed or inconsistent input data (CSV schema, shapes, config files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-convergent optimization or quadrature, singular
// matrices where positive definiteness is required.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace clic
