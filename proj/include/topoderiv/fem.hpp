#pragma once

#include "topoderiv/coeff.hpp"
#include "topoderiv/mesh.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <vector>

namespace topoderiv {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Nodal = Eigen::VectorXd;

/// Right-hand side f, either P1-interpolated nodal values or one constant
/// per element.
struct Source {
    enum class Kind { nodal, per_element };
    Kind kind = Kind::nodal;
    std::vector<double> values;

    static Source nodal(std::vector<double> v) { return {Kind::nodal, std::move(v)}; }
    static Source per_element(std::vector<double> v) { return {Kind::per_element, std::move(v)}; }
};

struct ProblemSpec {
    std::shared_ptr<const Mesh> mesh;
    CoefficientField coeff;
    Source source;
    Nodal target;  ///< y_d at the vertices

    /// Throws InputError when lengths are inconsistent with the mesh.
    void validate() const;
    ProblemSpec with_coeff(CoefficientField c) const { return {mesh, std::move(c), source, target}; }
};

struct SolverOptions {
    double rel_tol = 1e-12;
    int max_iter_factor = 10;  ///< iteration cap = factor · dof
};

struct FemSolution {
    Nodal y;
    Nodal p;
    double cost = 0.0;
};

/// Stiffness with Dirichlet rows and columns replaced by identity, and the
/// unmodified P1 mass matrix.
struct Operators {
    SparseMatrix stiffness;
    SparseMatrix mass;
};

/// Stiffness entry (i, j) = Σ_e area_e (a_e ∇φ_j)·∇φ_i; exact P1 mass.
Operators assemble(const Mesh& mesh, const CoefficientField& coeff);
SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeff, bool eliminate_dirichlet = true);
SparseMatrix assemble_mass(const Mesh& mesh);

/// ∫ f φ_i for each node, zero on Dirichlet nodes.
Nodal load_vector(const Mesh& mesh, const Source& source);

/// Solve A x = rhs to the requested relative residual. Symmetric systems use
/// incomplete-Cholesky CG, others ILUT-BiCGSTAB. Throws SolverError.
Nodal solve_linear(const SparseMatrix& a, const Nodal& rhs, bool symmetric, const SolverOptions& opts = {});

Nodal solve_state(const ProblemSpec& spec, const SolverOptions& opts = {});

/// Solves stiffnessᵀ p = mass (y − y_d) (p is the trial function in the second slot).
Nodal solve_adjoint(const ProblemSpec& spec, const Nodal& y, const SolverOptions& opts = {});

/// Solves stiffness(a_r)ᵀ p̃ = mass ½((y_r − y_d) + (y − y_d)).
Nodal solve_averaged_adjoint(const ProblemSpec& spec_r, const Nodal& y_r, const Nodal& y, const SolverOptions& opts = {});

/// ½ (y − y_d)ᵀ mass (y − y_d), evaluated element by element.
double eval_cost(const Mesh& mesh, const Nodal& y, const Nodal& y_d);

FemSolution solve(const ProblemSpec& spec, const SolverOptions& opts = {});

Vec2 element_gradient(const Mesh& mesh, const Nodal& field, int e);

/// P1 gradient of the element that contains x0.
Vec2 gradient_at(const Mesh& mesh, const Nodal& field, const Vec2& x0);

/// ∫ (a_r − a) ∇u · ∇v over the mesh with per-element constants.
double weighted_gradient_product(const Mesh& mesh, const CoefficientField& a_r, const CoefficientField& a, const Nodal& u,
                                 const Nodal& v);

/// Nodal interpolation of a function of position.
template <class F>
Nodal interpolate(const Mesh& mesh, F&& f) {
    Nodal out(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) out[i] = f(mesh.vertex(i));
    return out;
}

/// L² norm of (u_h − u) with a degree-5 quadrature on each element.
template <class F>
double l2_error(const Mesh& mesh, const Nodal& uh, F&& exact);

}  // namespace topoderiv

#include "topoderiv/fem_impl.hpp"
