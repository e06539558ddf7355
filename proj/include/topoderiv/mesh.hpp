#pragma once

#include "topoderiv/types.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace topoderiv {

using Triangle = std::array<int, 3>;

/// Axis-aligned rectangle [lo.x, hi.x] × [lo.y, hi.y].
struct Rect {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{1.0, 1.0};

    double area() const { return (hi.x() - lo.x()) * (hi.y() - lo.y()); }
};

/// Conforming 2D triangulation. Immutable after construction.
///
/// Every element is stored counter-clockwise with positive area; boundary
/// nodes are derived from the edge topology (vertices of edges that belong to
/// exactly one element). A bucket grid over the bounding box backs point
/// location.
class Mesh {
public:
    Mesh(std::vector<Vec2> vertices, std::vector<Triangle> elements);

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_elements() const { return static_cast<int>(elements_.size()); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<Triangle>& elements() const { return elements_; }
    const Vec2& vertex(int i) const { return vertices_[i]; }
    const Triangle& element(int e) const { return elements_[e]; }

    /// Sorted list of vertex ids on the boundary.
    const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
    bool is_boundary(int vertex) const { return on_boundary_[vertex] != 0; }

    double element_area(int e) const { return areas_[e]; }
    const std::vector<double>& element_areas() const { return areas_; }
    const Vec2& element_centroid(int e) const { return centroids_[e]; }
    double element_diameter(int e) const;
    double max_element_diameter() const;
    double total_area() const;

    /// Bounding box of all vertices.
    const Rect& bounds() const { return bounds_; }

    /// Element whose closed triangle contains x (1e-12 relative slack); the
    /// lowest id wins when several qualify. Throws NotFoundError.
    int locate_element(const Vec2& x) const;
    std::optional<int> find_element(const Vec2& x) const;

    /// Constant gradients of the three P1 basis functions on element e.
    std::array<Vec2, 3> basis_gradients(int e) const;

private:
    void build_locator();
    bool contains(int e, const Vec2& x) const;

    std::vector<Vec2> vertices_;
    std::vector<Triangle> elements_;
    std::vector<double> areas_;
    std::vector<Vec2> centroids_;
    std::vector<int> boundary_nodes_;
    std::vector<char> on_boundary_;
    Rect bounds_;

    int grid_nx_ = 1, grid_ny_ = 1;
    Vec2 grid_cell_{1.0, 1.0};
    std::vector<std::vector<int>> buckets_;
};

/// Structured triangulation of a rectangle with n cells per axis; each cell is
/// split along one diagonal, alternating in a checkerboard pattern, giving
/// 2n² elements.
Mesh build_rect_mesh(const Rect& bounds, int n);

/// Red refinement: each triangle is split into four through its edge midpoints.
Mesh uniform_refine(const Mesh& mesh);

/// Scaled inclusion x₀ + rω with ω = {x : xᵀHx ≤ 1}, det H = 1.
struct InclusionShape {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
    Mat2 shape_matrix = Mat2::Identity();

    /// Validating constructor (det H = 1, H symmetric positive definite, r > 0).
    InclusionShape(const Vec2& center, double radius, const Mat2& shape_matrix);
    InclusionShape() = default;

    static InclusionShape ball(const Vec2& center, double radius);

    /// Ellipse with semi-axis r·√λ along (cos θ, sin θ) and r/√λ across it,
    /// i.e. H = Rᵀ diag(1/λ, λ) R. This is the orientation for which
    /// delta_j_ellipse(λ, θ) is the topological derivative.
    static InclusionShape ellipse(const Vec2& center, double radius, double lambda, double theta);

    bool contains(const Vec2& x) const;
    bool is_ball(double tol = 1e-14) const;

    /// Half widths of the axis-aligned bounding box.
    Vec2 half_extent() const;

    /// Lebesgue measure r²|ω| = πr².
    double area() const { return pi * radius * radius; }

    InclusionShape with_radius(double r) const { return {center, r, shape_matrix}; }
    InclusionShape with_center(const Vec2& c) const { return {c, radius, shape_matrix}; }
};

/// (λ, θ) with λ ≥ 1 such that shape_matrix = Rᵀ diag(1/λ, λ) R.
struct EllipseParameters {
    double lambda = 1.0;
    double theta = 0.0;
};
EllipseParameters ellipse_parameters(const Mat2& shape_matrix);

enum class TagMode { centroid, area_fraction };

/// Number of sub-triangles sampled per element in area_fraction mode.
inline constexpr int kAreaFractionSamples = 16;

/// Per-element inclusion weights in [0, 1]. Centroid mode returns 0/1 by
/// centroid membership; area_fraction mode returns the fraction of the 16
/// red-refined sub-triangles whose centroid lies inside. Rejects shapes whose
/// bounding box reaches the mesh boundary.
std::vector<double> tag_inclusion(const Mesh& mesh, const InclusionShape& shape, TagMode mode);

/// Largest diameter over elements whose bounding box meets the shape's.
double max_diameter_near(const Mesh& mesh, const InclusionShape& shape);

/// Enforce r/h ≥ min_ratio for the elements near the inclusion.
void check_resolution(const Mesh& mesh, const InclusionShape& shape, double min_ratio = 8.0);

}  // namespace topoderiv
