#pragma once

#include "topoderiv/coeff.hpp"
#include "topoderiv/fem.hpp"
#include "topoderiv/mesh.hpp"

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <vector>

namespace testing {

using namespace topoderiv;

inline std::shared_ptr<const Mesh> unit_mesh(int n) { return std::make_shared<const Mesh>(build_rect_mesh(Rect{}, n)); }

/// f ≡ 1, y_d ≡ 0 on the unit square with a constant coefficient.
inline ProblemSpec unit_problem(int n, const Mat2& a = Mat2::Identity(), double alpha = 1.0) {
    auto mesh = unit_mesh(n);
    return {mesh, constant_field(*mesh, a, {alpha}), Source::nodal(std::vector<double>(mesh->num_vertices(), 1.0)),
            Nodal::Zero(mesh->num_vertices())};
}

/// Random matrix with symmetric part ⪰ (alpha + margin)·I.
inline Mat2 random_admissible(std::mt19937_64& rng, double alpha, bool symmetric) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), m(0.1, 2.0);
    Mat2 s;
    s << u(rng), u(rng), 0.0, u(rng);
    s(1, 0) = s(0, 1);
    s = s * s.transpose();
    s += (alpha + m(rng)) * Mat2::Identity();
    if (!symmetric) {
        const double k = u(rng);
        s(0, 1) += k;
        s(1, 0) -= k;
    }
    return s;
}

inline Vec2 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng)};
}

}  // namespace testing
