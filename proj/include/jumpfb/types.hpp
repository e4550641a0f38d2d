// types.hpp: shared aliases, error types and numerical tolerances.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace jumpfb {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

// Every failure raised by the library derives from Error, so callers that do
// not care about the category can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class PositivityError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateSteadyStateError : public Error {
public:
    DegenerateSteadyStateError(const std::string& what, Index kernel_dim)
        : Error(what), kernel_dim_(kernel_dim) {}
    /// Number of singular values found below the kernel threshold.
    Index kernel_dim() const noexcept { return kernel_dim_; }

private:
    Index kernel_dim_;
};

/// Default thresholds used by validation and the spectral solvers.
/// Every operation taking a Tolerances argument falls back to these values.
struct Tolerances {
    double hermitian = 1e-12;        // relative to max|A|
    double trace = 1e-10;            // |Tr rho - 1|
    double positivity = 1e-10;       // min eigenvalue of a density matrix
    double trace_preserving = 1e-12; // |Tr S(E)| relative to max(1, |S|)
    double kernel = 1e-9;            // second-smallest singular value / |gen|
};

}  // namespace jumpfb
