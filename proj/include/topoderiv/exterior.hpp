#pragma once

#include "topoderiv/coeff.hpp"
#include "topoderiv/fem.hpp"
#include "topoderiv/mesh.hpp"

#include <memory>
#include <vector>

namespace topoderiv {

/// Free-space transmission problem with ã = b on ω and a₀ outside, truncated
/// to a disc with homogeneous Dirichlet data.
struct ExteriorConfig {
    InclusionShape shape;  ///< center 0, radius 1
    Mat2 a0 = Mat2::Identity();
    Mat2 b = Mat2::Identity();
    double truncation_radius = 20.0;
    int boundary_segments = 256;  ///< polygon segments on ∂ω
    double growth = 1.2;          ///< radial growth ratio beyond |x| = 2
    AdmissibilityParams params{};

    void validate() const;
};

/// Graded ring mesh of the truncated disc with the inclusion elements marked.
struct ExteriorMesh {
    std::shared_ptr<const Mesh> mesh;
    std::vector<char> inside;  ///< 1 for elements of the polygonal ω
    int pin_node = 0;          ///< gauge node (the origin)
    double inclusion_area = 0.0;
};

ExteriorMesh build_exterior_mesh(const InclusionShape& shape, double truncation_radius, int boundary_segments,
                                 double growth = 1.2);

enum class CorrectorKind { K, Q };

struct ExteriorSolution {
    Nodal field;  ///< representative with field[pin_node] = 0
    Vec2 moment = Vec2::Zero();  ///< ∫_ω ∇field
    CorrectorKind kind = CorrectorKind::K;
    Vec2 forcing = Vec2::Zero();
    int pin_node = 0;

    /// Same Ḣ¹ class, shifted so that the new pin node carries 0.
    ExteriorSolution repinned(int node) const;
};

/// Assembled exterior problem; reuse it for several right-hand sides.
class ExteriorProblem {
public:
    explicit ExteriorProblem(ExteriorConfig cfg, SolverOptions opts = {});

    const ExteriorConfig& config() const { return cfg_; }
    const ExteriorMesh& exterior_mesh() const { return mesh_; }
    const Mesh& mesh() const { return *mesh_.mesh; }

    /// ∫ã∇K·∇v + (b − a₀)∇y(x₀)·∫_ω∇v = 0.
    ExteriorSolution solve_K(const Vec2& gy) const;
    /// ∫ã∇v·∇Q + (b − a₀)∫_ω∇v·∇p(x₀) = 0 (Q in the second slot).
    ExteriorSolution solve_Q(const Vec2& gp) const;

    /// Exact per-element sum of area·∇field over ω.
    Vec2 moment(const Nodal& field) const;
    /// Constant gradients of the field on the inclusion elements.
    std::vector<Vec2> inclusion_gradients(const Nodal& field) const;

    /// Linear map ∇p ↦ ∫_ω ∇Q; column j is the moment of Q for e_j.
    Mat2 q_moment_map() const;
    /// pᵀRy = −(b − a₀)y · ∫_ω ∇Q_p.
    Mat2 sensitivity_matrix() const;
    /// Polarization matrix for isotropic a₀, b (|ω| = π).
    Mat2 polarization_matrix() const;

private:
    Nodal forcing(const Vec2& vector) const;
    ExteriorSolution finish(Nodal field, CorrectorKind kind, const Vec2& forcing) const;

    ExteriorConfig cfg_;
    SolverOptions opts_;
    ExteriorMesh mesh_;
    SparseMatrix stiffness_;
    SparseMatrix stiffness_t_;
    bool symmetric_ = true;
};

ExteriorSolution solve_K(const ExteriorConfig& cfg, const Vec2& gy);
ExteriorSolution solve_Q(const ExteriorConfig& cfg, const Vec2& gp);
Mat2 sensitivity_matrix(const ExteriorConfig& cfg);
Mat2 polarization_matrix(const ExteriorConfig& cfg);

/// Closed-form corrector for the unit ball with isotropic coefficients:
/// G(x) = g·x / max(1, |x|^d) · (−1/(b + a₀(d−1))).
double explicit_G(const Eigen::VectorXd& g, double a0, double b, int d, const Eigen::VectorXd& x);

/// Area-weighted mean and spread of per-element gradients.
struct GradientStats {
    Vec2 mean = Vec2::Zero();
    double std_dev = 0.0;  ///< sqrt of the weighted mean of |g − mean|²
    double relative() const { return mean.norm() > 0.0 ? std_dev / mean.norm() : 0.0; }
};
GradientStats inclusion_gradient_stats(const ExteriorProblem& problem, const Nodal& field);

/// |(b−a₀)gy·moment(Q) − (b−a₀)moment(K)·gp|; zero up to solver tolerance.
double kq_duality_residual(const ExteriorSolution& k, const ExteriorSolution& q, const Mat2& a0, const Mat2& b,
                           const Vec2& gy, const Vec2& gp);

}  // namespace topoderiv
