#include "topoderiv/fem.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cstdio>
#include <limits>
#include <string>

namespace topoderiv {

void ProblemSpec::validate() const {
    if (!mesh) throw InputError("problem: mesh is missing");
    if (coeff.size() != mesh->num_elements()) throw InputError("problem: coefficient length does not match element count");
    const std::size_t expected = source.kind == Source::Kind::nodal ? static_cast<std::size_t>(mesh->num_vertices())
                                                                    : static_cast<std::size_t>(mesh->num_elements());
    if (source.values.size() != expected) throw InputError("problem: source length does not match mesh");
    if (target.size() != mesh->num_vertices()) throw InputError("problem: target length does not match vertex count");
}

namespace {

void eliminate_dirichlet(const Mesh& mesh, SparseMatrix& a) {
    const auto& on = mesh.boundary_nodes();
    std::vector<char> fixed(mesh.num_vertices(), 0);
    for (int v : on) fixed[v] = 1;
    for (int row = 0; row < a.outerSize(); ++row)
        for (SparseMatrix::InnerIterator it(a, row); it; ++it)
            if (fixed[row] || fixed[it.col()]) it.valueRef() = (row == it.col()) ? 1.0 : 0.0;
    a.prune(0.0);
}

std::string fmt_residual(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeff, bool eliminate) {
    if (coeff.size() != mesh.num_elements()) throw InputError("assemble: coefficient does not match mesh");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * static_cast<std::size_t>(mesh.num_elements()));
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.element(e);
        const auto grad = mesh.basis_gradients(e);
        const double area = mesh.element_area(e);
        const Mat2& a = coeff[e];
        for (int j = 0; j < 3; ++j) {
            const Vec2 flux = a * grad[j];
            for (int i = 0; i < 3; ++i) trip.emplace_back(t[i], t[j], area * flux.dot(grad[i]));
        }
    }
    SparseMatrix k(mesh.num_vertices(), mesh.num_vertices());
    k.setFromTriplets(trip.begin(), trip.end());
    if (eliminate) eliminate_dirichlet(mesh, k);
    return k;
}

SparseMatrix assemble_mass(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * static_cast<std::size_t>(mesh.num_elements()));
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.element(e);
        const double area = mesh.element_area(e);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], area / 12.0 * (i == j ? 2.0 : 1.0));
    }
    SparseMatrix m(mesh.num_vertices(), mesh.num_vertices());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Operators assemble(const Mesh& mesh, const CoefficientField& coeff) {
    return {assemble_stiffness(mesh, coeff), assemble_mass(mesh)};
}

Nodal load_vector(const Mesh& mesh, const Source& source) {
    Nodal b = Nodal::Zero(mesh.num_vertices());
    if (source.kind == Source::Kind::nodal) {
        if (static_cast<int>(source.values.size()) != mesh.num_vertices()) throw InputError("load: nodal source length mismatch");
        const Eigen::Map<const Nodal> f(source.values.data(), mesh.num_vertices());
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const auto& t = mesh.element(e);
            const double area = mesh.element_area(e);
            const double sum = f[t[0]] + f[t[1]] + f[t[2]];
            for (int i = 0; i < 3; ++i) b[t[i]] += area / 12.0 * (sum + f[t[i]]);
        }
    } else {
        if (static_cast<int>(source.values.size()) != mesh.num_elements()) throw InputError("load: element source length mismatch");
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const auto& t = mesh.element(e);
            for (int i = 0; i < 3; ++i) b[t[i]] += mesh.element_area(e) / 3.0 * source.values[e];
        }
    }
    for (int v : mesh.boundary_nodes()) b[v] = 0.0;
    return b;
}

Nodal solve_linear(const SparseMatrix& a, const Nodal& rhs, bool symmetric, const SolverOptions& opts) {
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return Nodal::Zero(rhs.size());
    const int max_iter = std::max(1, opts.max_iter_factor * static_cast<int>(rhs.size()));

    Nodal x = Nodal::Zero(rhs.size());
    int iterations = 0;
    double achieved = 1.0, target = opts.rel_tol;
    const SparseMatrix abs_a = a.cwiseAbs();
    auto run = [&](auto& solver) {
        solver.setTolerance(opts.rel_tol);
        solver.setMaxIterations(max_iter);
        solver.compute(a);
        if (solver.info() != Eigen::Success) return;
        // Restart from the current iterate until the true residual meets the
        // tolerance or the rounding floor of the residual itself.
        for (int restart = 0; restart < 4; ++restart) {
            x = solver.solveWithGuess(rhs, x);
            iterations += static_cast<int>(solver.iterations());
            achieved = (a * x - rhs).norm() / rhs_norm;
            const double floor = std::numeric_limits<double>::epsilon() *
                                 (abs_a * x.cwiseAbs() + rhs.cwiseAbs()).norm() / rhs_norm;
            target = std::max(opts.rel_tol, floor);
            if (achieved <= target || iterations >= max_iter) return;
        }
    };
    if (symmetric) {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
        run(cg);
    } else {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> bicg;
        bicg.preconditioner().setDroptol(1e-6);
        bicg.preconditioner().setFillfactor(20);
        run(bicg);
    }
    if (!(achieved <= target))
        throw SolverError("linear solve did not converge: relative residual " + fmt_residual(achieved) + " after " +
                              std::to_string(iterations) + " iterations",
                          achieved, iterations);
    return x;
}

Nodal solve_state(const ProblemSpec& spec, const SolverOptions& opts) {
    spec.validate();
    const SparseMatrix k = assemble_stiffness(*spec.mesh, spec.coeff);
    return solve_linear(k, load_vector(*spec.mesh, spec.source), spec.coeff.is_symmetric(), opts);
}

namespace {

Nodal adjoint_rhs(const Mesh& mesh, const Nodal& residual) {
    Nodal rhs = assemble_mass(mesh) * residual;
    for (int v : mesh.boundary_nodes()) rhs[v] = 0.0;
    return rhs;
}

Nodal solve_transposed(const ProblemSpec& spec, const Nodal& rhs, const SolverOptions& opts) {
    const bool sym = spec.coeff.is_symmetric();
    const SparseMatrix k = assemble_stiffness(*spec.mesh, spec.coeff);
    if (sym) return solve_linear(k, rhs, true, opts);
    const SparseMatrix kt = k.transpose();
    return solve_linear(kt, rhs, false, opts);
}

}  // namespace

Nodal solve_adjoint(const ProblemSpec& spec, const Nodal& y, const SolverOptions& opts) {
    spec.validate();
    if (y.size() != spec.mesh->num_vertices()) throw InputError("adjoint: state length mismatch");
    return solve_transposed(spec, adjoint_rhs(*spec.mesh, y - spec.target), opts);
}

Nodal solve_averaged_adjoint(const ProblemSpec& spec_r, const Nodal& y_r, const Nodal& y, const SolverOptions& opts) {
    spec_r.validate();
    if (y_r.size() != spec_r.mesh->num_vertices() || y.size() != spec_r.mesh->num_vertices())
        throw InputError("averaged adjoint: state length mismatch");
    const Nodal avg = 0.5 * ((y_r - spec_r.target) + (y - spec_r.target));
    return solve_transposed(spec_r, adjoint_rhs(*spec_r.mesh, avg), opts);
}

double eval_cost(const Mesh& mesh, const Nodal& y, const Nodal& y_d) {
    if (y.size() != mesh.num_vertices() || y_d.size() != mesh.num_vertices()) throw InputError("cost: length mismatch");
    double sum = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.element(e);
        const double d0 = y[t[0]] - y_d[t[0]], d1 = y[t[1]] - y_d[t[1]], d2 = y[t[2]] - y_d[t[2]];
        const double s = d0 + d1 + d2;
        sum += mesh.element_area(e) / 12.0 * (d0 * d0 + d1 * d1 + d2 * d2 + s * s);
    }
    return 0.5 * sum;
}

FemSolution solve(const ProblemSpec& spec, const SolverOptions& opts) {
    FemSolution out;
    out.y = solve_state(spec, opts);
    out.p = solve_adjoint(spec, out.y, opts);
    out.cost = eval_cost(*spec.mesh, out.y, spec.target);
    return out;
}

Vec2 element_gradient(const Mesh& mesh, const Nodal& field, int e) {
    const auto& t = mesh.element(e);
    const auto g = mesh.basis_gradients(e);
    return field[t[0]] * g[0] + field[t[1]] * g[1] + field[t[2]] * g[2];
}

Vec2 gradient_at(const Mesh& mesh, const Nodal& field, const Vec2& x0) {
    if (field.size() != mesh.num_vertices()) throw InputError("gradient_at: field length mismatch");
    return element_gradient(mesh, field, mesh.locate_element(x0));
}

double weighted_gradient_product(const Mesh& mesh, const CoefficientField& a_r, const CoefficientField& a, const Nodal& u,
                                 const Nodal& v) {
    double sum = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Mat2 d = a_r[e] - a[e];
        if (d.isZero(0.0)) continue;
        sum += mesh.element_area(e) * (d * element_gradient(mesh, u, e)).dot(element_gradient(mesh, v, e));
    }
    return sum;
}

}  // namespace topoderiv
