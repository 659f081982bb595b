#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cnpressure {

/// Precondition violated by caller-supplied data.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Element with nonpositive Jacobian determinant encountered during assembly.
class AssemblyError : public std::runtime_error {
public:
    AssemblyError(std::size_t element, double det)
        : std::runtime_error("degenerate element " + std::to_string(element) +
                             " (Jacobian determinant " + std::to_string(det) + ")"),
          element_(element) {}

    std::size_t element() const noexcept { return element_; }

private:
    std::size_t element_;
};

/// Linear solver failed (singular factorization or residual above tolerance).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration did not reach the residual tolerance.
class ConvergenceError : public SolverError {
public:
    ConvergenceError(std::size_t step, int iterations, double residual, const std::string& hint = {})
        : SolverError("Newton did not converge at step " + std::to_string(step) + " after " +
                      std::to_string(iterations) + " iterations (residual " +
                      std::to_string(residual) + ")" + (hint.empty() ? "" : "; " + hint)),
          step_(step), iterations_(iterations), residual_(residual) {}

    std::size_t step() const noexcept { return step_; }
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t step_;
    int iterations_;
    double residual_;
};

}  // namespace cnpressure
