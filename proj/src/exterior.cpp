#include "topoderiv/exterior.hpp"

#include "topoderiv/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace topoderiv {

namespace {

Mat2 inverse_sqrt(const Mat2& h) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(h);
    const Vec2 s = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

double circumradius(const InclusionShape& shape) {
    return shape.radius / std::sqrt(sym_min_eigenvalue(shape.shape_matrix));
}

struct Ring {
    double t;
    int count;
};

std::vector<Ring> ring_layout(int segments, double outer, double growth) {
    const double h0 = 2.0 * pi / segments;
    const int inner_rings = std::max(2, static_cast<int>(std::lround(1.0 / h0)));
    std::vector<Ring> rings;
    for (int k = 1; k <= inner_rings; ++k) {
        const double t = static_cast<double>(k) / inner_rings;
        const int n = k == inner_rings ? segments : std::max(6, static_cast<int>(std::lround(segments * t)));
        rings.push_back({t, n});
    }
    const int fine = inner_rings;
    for (int k = 1; k <= fine; ++k) rings.push_back({1.0 + static_cast<double>(k) / fine, segments});

    double t = 2.0, step = 1.0 / fine;
    while (true) {
        step *= growth;
        if (t + step >= outer - 0.5 * step) break;
        t += step;
        const int n = std::clamp(static_cast<int>(std::lround(2.0 * pi * t / step)), 32, segments);
        rings.push_back({t, n});
    }
    const double last = std::max(outer - t, step);
    rings.push_back({outer, std::clamp(static_cast<int>(std::lround(2.0 * pi * outer / last)), 32, segments)});
    return rings;
}

void zipper(const std::vector<int>& a, const std::vector<int>& b, std::vector<Triangle>& out) {
    const long m = static_cast<long>(a.size()), n = static_cast<long>(b.size());
    long i = 0, j = 0;
    while (i < m || j < n) {
        const bool advance_a = j == n || (i < m && (i + 1) * n <= (j + 1) * m);
        if (advance_a) {
            out.push_back({a[i % m], b[j % n], a[(i + 1) % m]});
            ++i;
        } else {
            out.push_back({a[i % m], b[j % n], b[(j + 1) % n]});
            ++j;
        }
    }
}

}  // namespace

void ExteriorConfig::validate() const {
    const double rc = circumradius(shape);
    if (!(truncation_radius >= 10.0) || !(truncation_radius >= 10.0 * rc - 1e-12))
        throw InputError("exterior: truncation_radius must be at least 10 and 10x the inclusion circumradius");
    if (boundary_segments < 256) throw InputError("exterior: boundary_segments must be at least 256");
    if (!(growth >= 1.0) || !(growth <= 2.0)) throw InputError("exterior: growth must lie in [1, 2]");
    if (shape.center.norm() != 0.0) throw InputError("exterior: inclusion must be centered at the origin");
    if (sym_min_eigenvalue(0.5 * (a0 + a0.transpose())) < params.alpha - 1e-12)
        throw InputError("exterior: a0 is not admissible");
    if (sym_min_eigenvalue(0.5 * (b + b.transpose())) < params.alpha - 1e-12)
        throw InputError("exterior: b is not admissible");
}

ExteriorMesh build_exterior_mesh(const InclusionShape& shape, double truncation_radius, int boundary_segments,
                                 double growth) {
    const Mat2 stretch = inverse_sqrt(shape.shape_matrix);
    const double tau_max = 1.0 / std::sqrt(sym_min_eigenvalue(shape.shape_matrix));
    const double blend = std::max(2.0, 2.0 * (tau_max - 1.0));
    const double outer = truncation_radius / shape.radius;
    const auto rings = ring_layout(boundary_segments, outer, growth);

    std::vector<Vec2> verts{shape.center};
    std::vector<Triangle> elems;
    std::vector<char> inside;

    std::vector<int> previous{0};
    bool previous_inside = true;
    for (const Ring& ring : rings) {
        std::vector<int> ids(ring.count);
        const double c = ring.t <= 1.0 ? 0.0 : std::max(0.0, 1.0 - (ring.t - 1.0) / blend);
        const Mat2 map = ring.t <= 1.0 ? Mat2(ring.t * stretch) : Mat2(ring.t * Mat2::Identity() + c * (stretch - Mat2::Identity()));
        for (int k = 0; k < ring.count; ++k) {
            const double phi = 2.0 * pi * k / ring.count;
            ids[k] = static_cast<int>(verts.size());
            verts.push_back(shape.center + shape.radius * (map * Vec2(std::cos(phi), std::sin(phi))));
        }
        const std::size_t before = elems.size();
        if (previous.size() == 1) {
            for (int k = 0; k < ring.count; ++k) elems.push_back({0, ids[k], ids[(k + 1) % ring.count]});
        } else {
            zipper(previous, ids, elems);
        }
        const bool in = previous_inside && ring.t <= 1.0;
        inside.insert(inside.end(), elems.size() - before, in ? 1 : 0);
        previous = std::move(ids);
        previous_inside = in;
    }

    ExteriorMesh out;
    out.mesh = std::make_shared<const Mesh>(std::move(verts), std::move(elems));
    out.inside = std::move(inside);
    out.pin_node = 0;
    for (int e = 0; e < out.mesh->num_elements(); ++e)
        if (out.inside[e]) out.inclusion_area += out.mesh->element_area(e);
    return out;
}

ExteriorSolution ExteriorSolution::repinned(int node) const {
    if (node < 0 || node >= field.size()) throw InputError("repin: node out of range");
    ExteriorSolution out = *this;
    out.field.array() -= field[node];
    out.pin_node = node;
    return out;
}

ExteriorProblem::ExteriorProblem(ExteriorConfig cfg, SolverOptions opts) : cfg_(std::move(cfg)), opts_(opts) {
    cfg_.validate();
    mesh_ = build_exterior_mesh(cfg_.shape, cfg_.truncation_radius, cfg_.boundary_segments, cfg_.growth);
    std::vector<Mat2> values(mesh_.inside.size());
    for (std::size_t e = 0; e < values.size(); ++e) values[e] = mesh_.inside[e] ? cfg_.b : cfg_.a0;
    const CoefficientField coeff(std::move(values), cfg_.params);
    symmetric_ = coeff.is_symmetric();
    stiffness_ = assemble_stiffness(*mesh_.mesh, coeff);
    if (!symmetric_) stiffness_t_ = stiffness_.transpose();
}

Nodal ExteriorProblem::forcing(const Vec2& vector) const {
    const Mesh& m = *mesh_.mesh;
    Nodal rhs = Nodal::Zero(m.num_vertices());
    for (int e = 0; e < m.num_elements(); ++e) {
        if (!mesh_.inside[e]) continue;
        const auto& t = m.element(e);
        const auto g = m.basis_gradients(e);
        for (int i = 0; i < 3; ++i) rhs[t[i]] -= m.element_area(e) * g[i].dot(vector);
    }
    for (int v : m.boundary_nodes()) rhs[v] = 0.0;
    return rhs;
}

ExteriorSolution ExteriorProblem::finish(Nodal field, CorrectorKind kind, const Vec2& forcing) const {
    ExteriorSolution out;
    field.array() -= field[mesh_.pin_node];
    out.moment = moment(field);
    out.field = std::move(field);
    out.kind = kind;
    out.forcing = forcing;
    out.pin_node = mesh_.pin_node;
    return out;
}

ExteriorSolution ExteriorProblem::solve_K(const Vec2& gy) const {
    const Vec2 load = (cfg_.b - cfg_.a0) * gy;
    return finish(solve_linear(stiffness_, forcing(load), symmetric_, opts_), CorrectorKind::K, gy);
}

ExteriorSolution ExteriorProblem::solve_Q(const Vec2& gp) const {
    const Vec2 load = (cfg_.b - cfg_.a0).transpose() * gp;
    const SparseMatrix& a = symmetric_ ? stiffness_ : stiffness_t_;
    return finish(solve_linear(a, forcing(load), symmetric_, opts_), CorrectorKind::Q, gp);
}

Vec2 ExteriorProblem::moment(const Nodal& field) const {
    const Mesh& m = *mesh_.mesh;
    if (field.size() != m.num_vertices()) throw InputError("moment: field length mismatch");
    Vec2 sum = Vec2::Zero();
    for (int e = 0; e < m.num_elements(); ++e)
        if (mesh_.inside[e]) sum += m.element_area(e) * element_gradient(m, field, e);
    return sum;
}

std::vector<Vec2> ExteriorProblem::inclusion_gradients(const Nodal& field) const {
    const Mesh& m = *mesh_.mesh;
    std::vector<Vec2> out;
    for (int e = 0; e < m.num_elements(); ++e)
        if (mesh_.inside[e]) out.push_back(element_gradient(m, field, e));
    return out;
}

Mat2 ExteriorProblem::q_moment_map() const {
    std::array<Vec2, 2> cols;
    parallel_for(2, [&](int j) { cols[j] = solve_Q(Vec2::Unit(j)).moment; });
    Mat2 t;
    t.col(0) = cols[0];
    t.col(1) = cols[1];
    return t;
}

Mat2 ExteriorProblem::sensitivity_matrix() const {
    return -q_moment_map().transpose() * (cfg_.b - cfg_.a0);
}

Mat2 ExteriorProblem::polarization_matrix() const {
    const double tol = 1e-14;
    auto isotropic = [&](const Mat2& m) {
        return std::abs(m(0, 1)) <= tol * std::abs(m(0, 0)) && std::abs(m(1, 0)) <= tol * std::abs(m(0, 0)) &&
               std::abs(m(0, 0) - m(1, 1)) <= tol * std::abs(m(0, 0));
    };
    if (!isotropic(cfg_.a0) || !isotropic(cfg_.b))
        throw UnsupportedError("polarization_matrix: a0 and b must be isotropic");
    const double a0 = cfg_.a0(0, 0), b = cfg_.b(0, 0);
    return (b / a0) * (cfg_.shape.area() * Mat2::Identity() + q_moment_map());
}

ExteriorSolution solve_K(const ExteriorConfig& cfg, const Vec2& gy) { return ExteriorProblem(cfg).solve_K(gy); }
ExteriorSolution solve_Q(const ExteriorConfig& cfg, const Vec2& gp) { return ExteriorProblem(cfg).solve_Q(gp); }
Mat2 sensitivity_matrix(const ExteriorConfig& cfg) { return ExteriorProblem(cfg).sensitivity_matrix(); }
Mat2 polarization_matrix(const ExteriorConfig& cfg) { return ExteriorProblem(cfg).polarization_matrix(); }

double explicit_G(const Eigen::VectorXd& g, double a0, double b, int d, const Eigen::VectorXd& x) {
    if (d < 1 || d > 3 || g.size() != d || x.size() != d) throw InputError("explicit_G: dimension mismatch");
    const double scale = std::max(1.0, std::pow(x.norm(), d));
    return g.dot(x) / scale * (-1.0 / (b + a0 * (d - 1)));
}

double kq_duality_residual(const ExteriorSolution& k, const ExteriorSolution& q, const Mat2& a0, const Mat2& b,
                           const Vec2& gy, const Vec2& gp) {
    const Mat2 d = b - a0;
    return std::abs((d * gy).dot(q.moment) - (d * k.moment).dot(gp));
}

GradientStats inclusion_gradient_stats(const ExteriorProblem& problem, const Nodal& field) {
    const Mesh& m = problem.mesh();
    const auto& inside = problem.exterior_mesh().inside;
    GradientStats out;
    double area = 0.0;
    for (int e = 0; e < m.num_elements(); ++e)
        if (inside[e]) {
            out.mean += m.element_area(e) * element_gradient(m, field, e);
            area += m.element_area(e);
        }
    if (area == 0.0) return out;
    out.mean /= area;
    double var = 0.0;
    for (int e = 0; e < m.num_elements(); ++e)
        if (inside[e]) var += m.element_area(e) * (element_gradient(m, field, e) - out.mean).squaredNorm();
    out.std_dev = std::sqrt(var / area);
    return out;
}

}  // namespace topoderiv
