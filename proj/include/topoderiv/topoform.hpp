#pragma once

#include "topoderiv/types.hpp"

#include <Eigen/Core>

namespace topoderiv {

/// Point data with isotropic a(x₀) = a0·I and b·I in dimension d = gy.size().
struct ScalarPointData {
    double a0 = 1.0;
    double b = 1.0;
    Eigen::VectorXd gy;  ///< ∇y(x₀)
    Eigen::VectorXd gp;  ///< ∇p(x₀)

    int dim() const { return static_cast<int>(gy.size()); }
    /// Throws InputError unless d ∈ {1,2,3}, sizes agree, and a0, b ≥ alpha.
    void validate(double alpha = 0.0) const;
};

/// Point data with matrix-valued a(x₀), b in two dimensions.
struct MatrixPointData {
    Mat2 a0 = Mat2::Identity();
    Mat2 b = Mat2::Identity();
    Vec2 gy = Vec2::Zero();
    Vec2 gp = Vec2::Zero();

    static MatrixPointData from_scalar(const ScalarPointData& s);
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    double width() const { return hi - lo; }
};

/// δJ for a ball: −∇y·∇p · a₀d/(b + a₀(d−1)) · (b − a₀).
double delta_j_ball(const ScalarPointData& data);

/// Diagonal factors ((λ+1)/(a₀λ+b), (λ+1)/(a₀+bλ)) of the ellipse formula.
Vec2 ellipse_factors(double a0, double b, double lambda);

/// δJ for the ellipse family (d = 2):
/// −(b − a₀) a₀ ∇pᵀ Rᵀ diag(ellipse_factors) R ∇y with R = rotation(θ).
double delta_j_ellipse(const ScalarPointData& data, double lambda, double theta);

/// Range of pᵀRᵀdiag(λ₁,λ₂)Ry over orthogonal R.
Interval rotation_range(double lambda1, double lambda2, const Vec2& y, const Vec2& p);

/// Closure of the range of pᵀRᵀdiag(ellipse_factors(a0,b,λ))Ry over R ∈ O(2), λ > 0.
Interval g_range(double a0, double b, const Vec2& y, const Vec2& p);

/// Closed range of δJ over all ellipses with det H = 1. The endpoints are
/// limits for degenerate ellipses (λ → 0 or ∞) and are not attained.
struct EllipseRange {
    Interval closure;
    double infimum = 0.0;
    bool endpoints_attained = false;
};
EllipseRange delta_j_ellipse_range(const ScalarPointData& data);

/// General first-order term given the inclusion moment ∫_ω ∇Q:
/// −(b − a₀)∇y · (∇p + moment/|ω|).
double delta_j_general(const MatrixPointData& data, const Vec2& q_moment, double omega_measure);

/// −(1/|ω|)(b − a₀)(a₀/b) ∇y · M∇p.
double polarization_delta_j(double a0, double b, const Mat2& m, const Vec2& gy, const Vec2& gp, double omega_measure);

/// |ω|·diag(b(λ+1)/(a₀λ+b), b(λ+1)/(a₀+bλ)) rotated as RᵀMR.
Mat2 ellipse_polarization_matrix(double a0, double b, double lambda, double theta, double omega_measure = pi);

/// Inclusion moment ∫_ω ∇Q for the ball with isotropic coefficients:
/// −(b − a₀)|ω|/(b + a₀(d−1)) · ∇p.
Eigen::VectorXd ball_q_moment(const ScalarPointData& data, double omega_measure);

}  // namespace topoderiv
