#include "topoderiv/mesh.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace topoderiv {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Triangle> elements)
    : vertices_(std::move(vertices)), elements_(std::move(elements)) {
    if (vertices_.empty() || elements_.empty()) throw InputError("mesh: empty vertex or element list");

    const int nv = num_vertices();
    areas_.resize(elements_.size());
    centroids_.resize(elements_.size());
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const auto& t = elements_[e];
        for (int v : t)
            if (v < 0 || v >= nv) throw InputError("mesh: element " + std::to_string(e) + " has invalid vertex id");
        const double a = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
        if (!(a > 0.0)) throw InputError("mesh: element " + std::to_string(e) + " has non-positive area");
        areas_[e] = a;
        centroids_[e] = (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
    }

    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : elements_)
        for (int k = 0; k < 3; ++k) ++edge_count[edge_key(t[k], t[(k + 1) % 3])];

    on_boundary_.assign(nv, 0);
    for (const auto& [edge, count] : edge_count) {
        if (count > 2) throw InputError("mesh: edge shared by more than two elements");
        if (count == 1) on_boundary_[edge.first] = on_boundary_[edge.second] = 1;
    }
    for (int v = 0; v < nv; ++v)
        if (on_boundary_[v]) boundary_nodes_.push_back(v);

    bounds_.lo = bounds_.hi = vertices_.front();
    for (const auto& v : vertices_) {
        bounds_.lo = bounds_.lo.cwiseMin(v);
        bounds_.hi = bounds_.hi.cwiseMax(v);
    }
    build_locator();
}

double Mesh::element_diameter(int e) const {
    const auto& t = elements_[e];
    const Vec2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    return std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
}

double Mesh::max_element_diameter() const {
    double h = 0.0;
    for (int e = 0; e < num_elements(); ++e) h = std::max(h, element_diameter(e));
    return h;
}

double Mesh::total_area() const {
    // Compensated summation.
    double sum = 0.0, comp = 0.0;
    for (double a : areas_) {
        const double y = a - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

std::array<Vec2, 3> Mesh::basis_gradients(int e) const {
    const auto& t = elements_[e];
    const Vec2 &p0 = vertices_[t[0]], &p1 = vertices_[t[1]], &p2 = vertices_[t[2]];
    const double inv = 1.0 / (2.0 * areas_[e]);
    return {Vec2{(p1.y() - p2.y()) * inv, (p2.x() - p1.x()) * inv},
            Vec2{(p2.y() - p0.y()) * inv, (p0.x() - p2.x()) * inv},
            Vec2{(p0.y() - p1.y()) * inv, (p1.x() - p0.x()) * inv}};
}

void Mesh::build_locator() {
    const Vec2 extent = (bounds_.hi - bounds_.lo).cwiseMax(Vec2::Constant(1e-300));
    const double cells = std::max(1.0, std::sqrt(static_cast<double>(elements_.size())));
    const double aspect = extent.x() / extent.y();
    grid_nx_ = std::clamp(static_cast<int>(std::ceil(cells * std::sqrt(aspect))), 1, 4096);
    grid_ny_ = std::clamp(static_cast<int>(std::ceil(cells / std::sqrt(aspect))), 1, 4096);
    grid_cell_ = {extent.x() / grid_nx_, extent.y() / grid_ny_};
    buckets_.assign(static_cast<std::size_t>(grid_nx_) * grid_ny_, {});

    const double slack = 1e-12 * extent.maxCoeff();
    for (int e = 0; e < num_elements(); ++e) {
        Vec2 lo = vertices_[elements_[e][0]], hi = lo;
        for (int k = 1; k < 3; ++k) {
            lo = lo.cwiseMin(vertices_[elements_[e][k]]);
            hi = hi.cwiseMax(vertices_[elements_[e][k]]);
        }
        const int i0 = std::clamp(static_cast<int>(std::floor((lo.x() - slack - bounds_.lo.x()) / grid_cell_.x())), 0, grid_nx_ - 1);
        const int i1 = std::clamp(static_cast<int>(std::floor((hi.x() + slack - bounds_.lo.x()) / grid_cell_.x())), 0, grid_nx_ - 1);
        const int j0 = std::clamp(static_cast<int>(std::floor((lo.y() - slack - bounds_.lo.y()) / grid_cell_.y())), 0, grid_ny_ - 1);
        const int j1 = std::clamp(static_cast<int>(std::floor((hi.y() + slack - bounds_.lo.y()) / grid_cell_.y())), 0, grid_ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * grid_nx_ + i].push_back(e);
    }
}

bool Mesh::contains(int e, const Vec2& x) const {
    const auto& t = elements_[e];
    const Vec2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    const double area = areas_[e];
    const double tol = -1e-12;
    return signed_area(x, b, c) / area >= tol && signed_area(a, x, c) / area >= tol &&
           signed_area(a, b, x) / area >= tol;
}

std::optional<int> Mesh::find_element(const Vec2& x) const {
    const Vec2 extent = bounds_.hi - bounds_.lo;
    const double slack = 1e-12 * extent.maxCoeff();
    if (!x.allFinite() || x.x() < bounds_.lo.x() - slack || x.x() > bounds_.hi.x() + slack ||
        x.y() < bounds_.lo.y() - slack || x.y() > bounds_.hi.y() + slack)
        return std::nullopt;
    const int i = std::clamp(static_cast<int>(std::floor((x.x() - bounds_.lo.x()) / grid_cell_.x())), 0, grid_nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((x.y() - bounds_.lo.y()) / grid_cell_.y())), 0, grid_ny_ - 1);
    std::optional<int> best;
    for (int e : buckets_[static_cast<std::size_t>(j) * grid_nx_ + i])
        if ((!best || e < *best) && contains(e, x)) best = e;
    return best;
}

int Mesh::locate_element(const Vec2& x) const {
    if (auto e = find_element(x)) return *e;
    throw NotFoundError("locate_element: point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                        ") is outside the mesh");
}

Mesh build_rect_mesh(const Rect& bounds, int n) {
    if (n < 1) throw InputError("build_rect_mesh: n must be at least 1");
    if (!(bounds.hi.x() > bounds.lo.x()) || !(bounds.hi.y() > bounds.lo.y()))
        throw InputError("build_rect_mesh: rectangle has zero area");

    const int np = n + 1;
    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>(np) * np);
    const double dx = (bounds.hi.x() - bounds.lo.x()) / n, dy = (bounds.hi.y() - bounds.lo.y()) / n;
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i) {
            // Land exactly on the far edges so boundary coordinates are exact.
            const double x = i == n ? bounds.hi.x() : bounds.lo.x() + i * dx;
            const double y = j == n ? bounds.hi.y() : bounds.lo.y() + j * dy;
            vertices.emplace_back(x, y);
        }

    std::vector<Triangle> elements;
    elements.reserve(2 * static_cast<std::size_t>(n) * n);
    auto id = [np](int i, int j) { return j * np + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                elements.push_back({v00, v10, v11});
                elements.push_back({v00, v11, v01});
            } else {
                elements.push_back({v00, v10, v01});
                elements.push_back({v10, v11, v01});
            }
        }
    return Mesh(std::move(vertices), std::move(elements));
}

Mesh uniform_refine(const Mesh& mesh) {
    std::vector<Vec2> vertices = mesh.vertices();
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = edge_key(a, b);
        if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
        const int id = static_cast<int>(vertices.size());
        vertices.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
        midpoint.emplace(key, id);
        return id;
    };

    std::vector<Triangle> elements;
    elements.reserve(4 * mesh.elements().size());
    for (const auto& t : mesh.elements()) {
        const int m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
        elements.push_back({t[0], m01, m20});
        elements.push_back({m01, t[1], m12});
        elements.push_back({m20, m12, t[2]});
        elements.push_back({m01, m12, m20});
    }
    return Mesh(std::move(vertices), std::move(elements));
}

InclusionShape::InclusionShape(const Vec2& c, double r, const Mat2& h) : center(c), radius(r), shape_matrix(h) {
    if (!c.allFinite()) throw InputError("inclusion: center must be finite");
    if (!(r > 0.0) || !std::isfinite(r)) throw InputError("inclusion: radius must be positive");
    if (std::abs(h(0, 1) - h(1, 0)) > 1e-12) throw InputError("inclusion: shape matrix must be symmetric");
    if (std::abs(h.determinant() - 1.0) > 1e-10) throw InputError("inclusion: shape matrix must have determinant 1");
    if (!(h(0, 0) > 0.0)) throw InputError("inclusion: shape matrix must be positive definite");
}

InclusionShape InclusionShape::ball(const Vec2& center, double radius) {
    return InclusionShape(center, radius, Mat2::Identity());
}

InclusionShape InclusionShape::ellipse(const Vec2& center, double radius, double lambda, double theta) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("inclusion: ellipse lambda must be positive");
    const Mat2 r = rotation(theta);
    Mat2 d = Mat2::Zero();
    d(0, 0) = 1.0 / lambda;
    d(1, 1) = lambda;
    Mat2 h = r.transpose() * d * r;
    h(1, 0) = h(0, 1);
    // Re-normalise rounding so det H = 1 holds to machine precision.
    h /= std::sqrt(h.determinant());
    return InclusionShape(center, radius, h);
}

bool InclusionShape::contains(const Vec2& x) const {
    const Vec2 d = x - center;
    return d.dot(shape_matrix * d) <= radius * radius;
}

bool InclusionShape::is_ball(double tol) const { return (shape_matrix - Mat2::Identity()).cwiseAbs().maxCoeff() <= tol; }

Vec2 InclusionShape::half_extent() const {
    const Mat2 inv = shape_matrix.inverse();
    return {radius * std::sqrt(inv(0, 0)), radius * std::sqrt(inv(1, 1))};
}

EllipseParameters ellipse_parameters(const Mat2& shape_matrix) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(shape_matrix);
    const double mu_small = eig.eigenvalues()(0), mu_large = eig.eigenvalues()(1);
    EllipseParameters out;
    out.lambda = std::sqrt(mu_large / mu_small);
    if (out.lambda - 1.0 < 1e-12) return {1.0, 0.0};
    const Vec2 v = eig.eigenvectors().col(0);
    double theta = std::atan2(v.y(), v.x());
    if (theta < 0.0) theta += pi;
    if (theta >= pi) theta -= pi;
    out.theta = theta;
    return out;
}

namespace {

void check_inside(const Mesh& mesh, const InclusionShape& shape) {
    const Vec2 ext = shape.half_extent();
    const Rect& b = mesh.bounds();
    if (shape.center.x() - ext.x() <= b.lo.x() || shape.center.x() + ext.x() >= b.hi.x() ||
        shape.center.y() - ext.y() <= b.lo.y() || shape.center.y() + ext.y() >= b.hi.y())
        throw InputError("tag_inclusion: inclusion touches the domain boundary");
}

bool bbox_overlaps(const Mesh& mesh, int e, const Vec2& lo, const Vec2& hi) {
    const auto& t = mesh.element(e);
    Vec2 elo = mesh.vertex(t[0]), ehi = elo;
    for (int k = 1; k < 3; ++k) {
        elo = elo.cwiseMin(mesh.vertex(t[k]));
        ehi = ehi.cwiseMax(mesh.vertex(t[k]));
    }
    return elo.x() <= hi.x() && ehi.x() >= lo.x() && elo.y() <= hi.y() && ehi.y() >= lo.y();
}

// Centroids of the 16 sub-triangles of two red refinements, in barycentric
// coordinates of the parent.
std::array<Eigen::Vector3d, kAreaFractionSamples> subsample_points() {
    std::array<Eigen::Vector3d, kAreaFractionSamples> out;
    std::vector<std::array<Eigen::Vector3d, 3>> tris{{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)}};
    for (int level = 0; level < 2; ++level) {
        std::vector<std::array<Eigen::Vector3d, 3>> next;
        for (const auto& t : tris) {
            const Eigen::Vector3d m01 = 0.5 * (t[0] + t[1]), m12 = 0.5 * (t[1] + t[2]), m20 = 0.5 * (t[2] + t[0]);
            next.push_back({t[0], m01, m20});
            next.push_back({m01, t[1], m12});
            next.push_back({m20, m12, t[2]});
            next.push_back({m01, m12, m20});
        }
        tris = std::move(next);
    }
    for (std::size_t k = 0; k < tris.size(); ++k) out[k] = (tris[k][0] + tris[k][1] + tris[k][2]) / 3.0;
    return out;
}

}  // namespace

std::vector<double> tag_inclusion(const Mesh& mesh, const InclusionShape& shape, TagMode mode) {
    if (!mesh.find_element(shape.center)) throw InputError("tag_inclusion: center lies outside the mesh");
    check_inside(mesh, shape);

    const Vec2 ext = shape.half_extent();
    const Vec2 lo = shape.center - ext, hi = shape.center + ext;
    static const auto samples = subsample_points();

    std::vector<double> weight(mesh.num_elements(), 0.0);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (!bbox_overlaps(mesh, e, lo, hi)) continue;
        if (mode == TagMode::centroid) {
            weight[e] = shape.contains(mesh.element_centroid(e)) ? 1.0 : 0.0;
            continue;
        }
        const auto& t = mesh.element(e);
        const Vec2 &a = mesh.vertex(t[0]), &b = mesh.vertex(t[1]), &c = mesh.vertex(t[2]);
        if (shape.contains(a) && shape.contains(b) && shape.contains(c)) {
            weight[e] = 1.0;
            continue;
        }
        int inside = 0;
        for (const auto& s : samples)
            if (shape.contains(s(0) * a + s(1) * b + s(2) * c)) ++inside;
        weight[e] = static_cast<double>(inside) / kAreaFractionSamples;
    }
    return weight;
}

double max_diameter_near(const Mesh& mesh, const InclusionShape& shape) {
    const Vec2 ext = shape.half_extent();
    const Vec2 lo = shape.center - ext, hi = shape.center + ext;
    double h = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e)
        if (bbox_overlaps(mesh, e, lo, hi)) h = std::max(h, mesh.element_diameter(e));
    return h;
}

void check_resolution(const Mesh& mesh, const InclusionShape& shape, double min_ratio) {
    const double h = max_diameter_near(mesh, shape);
    if (h <= 0.0 || shape.radius / h >= min_ratio) return;
    const int levels = static_cast<int>(std::ceil(std::log2(min_ratio * h / shape.radius) - 1e-12));
    throw ResolutionError("inclusion radius " + std::to_string(shape.radius) + " is resolved with r/h = " +
                              std::to_string(shape.radius / h) + " < " + std::to_string(min_ratio) + "; refine the mesh " +
                              std::to_string(levels) + " more time(s)",
                          levels);
}

}  // namespace topoderiv
