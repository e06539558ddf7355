#include "topoderiv/topoform.hpp"

#include <cmath>
#include <string>

namespace topoderiv {

void ScalarPointData::validate(double alpha) const {
    const int d = dim();
    if (d < 1 || d > 3) throw InputError("point data: dimension must be 1, 2 or 3");
    if (gp.size() != d) throw InputError("point data: gradient sizes differ");
    if (!(a0 >= alpha) || !(b >= alpha) || !(a0 > 0.0) || !(b > 0.0))
        throw InputError("point data: a0 and b must be admissible");
}

MatrixPointData MatrixPointData::from_scalar(const ScalarPointData& s) {
    if (s.dim() != 2) throw InputError("point data: matrix form requires d = 2");
    return {scalar_matrix(s.a0), scalar_matrix(s.b), s.gy, s.gp};
}

double delta_j_ball(const ScalarPointData& data) {
    data.validate();
    const int d = data.dim();
    const double a0 = data.a0, b = data.b;
    return -data.gy.dot(data.gp) * a0 * d / (b + a0 * (d - 1)) * (b - a0);
}

Vec2 ellipse_factors(double a0, double b, double lambda) {
    return {(lambda + 1.0) / (a0 * lambda + b), (lambda + 1.0) / (a0 + b * lambda)};
}

double delta_j_ellipse(const ScalarPointData& data, double lambda, double theta) {
    data.validate();
    if (data.dim() != 2) throw InputError("delta_j_ellipse: only defined for d = 2");
    if (!(lambda > 0.0)) throw InputError("delta_j_ellipse: lambda must be positive");
    const Vec2 f = ellipse_factors(data.a0, data.b, lambda);
    const Mat2 r = rotation(theta);
    const Vec2 ry = r * Vec2(data.gy), rp = r * Vec2(data.gp);
    const double form = rp.x() * f.x() * ry.x() + rp.y() * f.y() * ry.y();
    return -(data.b - data.a0) * data.a0 * form;
}

Interval rotation_range(double lambda1, double lambda2, const Vec2& y, const Vec2& p) {
    const double mid = 0.5 * (lambda1 + lambda2) * y.dot(p);
    const double half = 0.5 * std::abs(lambda1 - lambda2) * y.norm() * p.norm();
    return {mid - half, mid + half};
}

Interval g_range(double a0, double b, const Vec2& y, const Vec2& p) {
    if (!(a0 > 0.0) || !(b > 0.0)) throw InputError("g_range: a0 and b must be positive");
    const double mid = 0.5 * (1.0 / a0 + 1.0 / b) * y.dot(p);
    const double half = 0.5 * std::abs(1.0 / a0 - 1.0 / b) * y.norm() * p.norm();
    return {mid - half, mid + half};
}

EllipseRange delta_j_ellipse_range(const ScalarPointData& data) {
    data.validate();
    if (data.dim() != 2) throw InputError("delta_j_ellipse_range: only defined for d = 2");
    const double db = data.b - data.a0;
    const double s = data.gy.dot(data.gp);
    const double n = data.gy.norm() * data.gp.norm();
    const double base = -db * s + 0.5 * db * db / data.b * s;
    const double half = 0.5 * db * db / data.b * n;
    EllipseRange out;
    out.closure = {base - half, base + half};
    out.infimum = out.closure.lo;
    out.endpoints_attained = half == 0.0;
    return out;
}

double delta_j_general(const MatrixPointData& data, const Vec2& q_moment, double omega_measure) {
    if (!(omega_measure > 0.0)) throw InputError("delta_j_general: |omega| must be positive");
    const Mat2 db = data.b - data.a0;
    return -(db * data.gy).dot(data.gp + q_moment / omega_measure);
}

double polarization_delta_j(double a0, double b, const Mat2& m, const Vec2& gy, const Vec2& gp, double omega_measure) {
    if (!(omega_measure > 0.0)) throw InputError("polarization_delta_j: |omega| must be positive");
    return -(b - a0) * (a0 / b) * gy.dot(m * gp) / omega_measure;
}

Mat2 ellipse_polarization_matrix(double a0, double b, double lambda, double theta, double omega_measure) {
    const Vec2 f = ellipse_factors(a0, b, lambda);
    Mat2 d = Mat2::Zero();
    d(0, 0) = b * f.x();
    d(1, 1) = b * f.y();
    const Mat2 r = rotation(theta);
    return omega_measure * r.transpose() * d * r;
}

Eigen::VectorXd ball_q_moment(const ScalarPointData& data, double omega_measure) {
    data.validate();
    const int d = data.dim();
    return -(data.b - data.a0) * omega_measure / (data.b + data.a0 * (d - 1)) * data.gp;
}

}  // namespace topoderiv
