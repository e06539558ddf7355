#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace topoderiv {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or inconsistent input data.
class InputError : public Error {
public:
    using Error::Error;
};

/// Point location failed.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Requested functionality is not available for the given data.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A linear solve did not reach its tolerance within the iteration cap.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double achieved_residual, int iterations)
        : Error(what), achieved_residual_(achieved_residual), iterations_(iterations) {}

    double achieved_residual() const { return achieved_residual_; }
    int iterations() const { return iterations_; }

private:
    double achieved_residual_;
    int iterations_;
};

/// An inclusion is not resolved finely enough by the mesh.
class ResolutionError : public Error {
public:
    ResolutionError(const std::string& what, int required_refinements)
        : Error(what), required_refinements_(required_refinements) {}

    /// Number of uniform refinements needed to satisfy the rule.
    int required_refinements() const { return required_refinements_; }

private:
    int required_refinements_;
};

inline constexpr double pi = std::numbers::pi;

/// Rotation used throughout for shapes and formulas: the first row is the
/// unit vector at angle theta, so Rᵀe₁ = (cos θ, sin θ).
inline Mat2 rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat2 r;
    r << c, s, -s, c;
    return r;
}

/// Smallest eigenvalue of the symmetric part (A+Aᵀ)/2, closed form.
inline double sym_min_eigenvalue(const Mat2& a) {
    const double p = a(0, 0), q = a(1, 1), o = 0.5 * (a(0, 1) + a(1, 0));
    const double mean = 0.5 * (p + q);
    const double half_gap = std::hypot(0.5 * (p - q), o);
    return mean - half_gap;
}

inline double sym_max_eigenvalue(const Mat2& a) {
    const double p = a(0, 0), q = a(1, 1), o = 0.5 * (a(0, 1) + a(1, 0));
    return 0.5 * (p + q) + std::hypot(0.5 * (p - q), o);
}

inline Mat2 scalar_matrix(double s) { return s * Mat2::Identity(); }

}  // namespace topoderiv
