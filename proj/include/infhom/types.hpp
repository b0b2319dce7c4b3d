#pragma once

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>

namespace infhom {

/// Gradient matrices are m x d with m, d <= 3.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 3, 3>;

/// Points in R^d, d <= 3; unused trailing coordinates are zero.
using Point = std::array<double, 3>;

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

inline Mat zero_mat(int rows, int cols) { return Mat::Zero(rows, cols); }

}  // namespace infhom
