#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace nodal {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration or an ill-formed KernelSpec / GridSpec.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A point outside the model's domain, or an empty lattice sphere.
class DomainError : public Error {
public:
    using Error::Error;
};

// Singular covariance, degenerate frame, rank-deficient gradient.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Value, gradient and Hessians of an R^m-valued field at one point.
// grad is m x n; hess[a] is the n x n Hessian of component a.
struct FieldJet {
    Eigen::VectorXd value;
    Matrix grad;
    std::vector<Matrix> hess;
};

}  // namespace nodal
