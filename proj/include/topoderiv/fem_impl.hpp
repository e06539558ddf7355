#pragma once

#include <array>
#include <cmath>

namespace topoderiv {

template <class F>
double l2_error(const Mesh& mesh, const Nodal& uh, F&& exact) {
    // 7-point Dunavant rule, exact for degree 5.
    constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115;
    constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456;
    constexpr double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
    static const std::array<std::array<double, 4>, 7> rule{{
        {1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
        {a1, b1, b1, w1},
        {b1, a1, b1, w1},
        {b1, b1, a1, w1},
        {a2, b2, b2, w2},
        {b2, a2, b2, w2},
        {b2, b2, a2, w2},
    }};
    double sum = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.element(e);
        double local = 0.0;
        for (const auto& q : rule) {
            const Vec2 x = q[0] * mesh.vertex(t[0]) + q[1] * mesh.vertex(t[1]) + q[2] * mesh.vertex(t[2]);
            const double uhx = q[0] * uh[t[0]] + q[1] * uh[t[1]] + q[2] * uh[t[2]];
            const double d = uhx - exact(x);
            local += q[3] * d * d;
        }
        sum += local * mesh.element_area(e);
    }
    return std::sqrt(sum);
}

}  // namespace topoderiv
