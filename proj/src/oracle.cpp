#include "topoderiv/oracle.hpp"

#include "topoderiv/parallel.hpp"

#include <cmath>
#include <string>

namespace topoderiv {

namespace {

void check_ladder(const std::vector<double>& radii) {
    if (radii.size() < 4) throw InputError("ladder: at least 4 radii are required");
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0)) throw InputError("ladder: radii must be positive");
        if (k > 0 && !(radii[k] < radii[k - 1])) throw InputError("ladder: radii must be strictly decreasing");
    }
}

void check_geometric(const std::vector<double>& radii) {
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (radii[k] / radii[k - 1] > 0.75 + 1e-12) throw InputError("ladder: successive ratio must be <= 0.75");
}

bool isotropic(const Mat2& m) { return m(0, 1) == 0.0 && m(1, 0) == 0.0 && m(0, 0) == m(1, 1); }

double quotient_scale(double r) { return r * r * pi; }

// Σ area·(g(a_r) − g(a)) over elements whose coefficient changed.
double cost_term_change(const Mesh& mesh, const CoefficientField& a, const CoefficientField& a_r, const CostModel& g) {
    double sum = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (a_r[e] == a[e]) continue;
        if (!isotropic(a[e]) || !isotropic(a_r[e])) throw UnsupportedError("descent: cost model needs isotropic coefficients");
        sum += mesh.element_area(e) * (g(a_r[e](0, 0)) - g(a[e](0, 0)));
    }
    return sum;
}

}  // namespace

QuotientStudy fit_quotients(const std::vector<double>& radii, const std::vector<double>& quotients) {
    check_ladder(radii);
    if (quotients.size() != radii.size()) throw InputError("fit: radii and quotients differ in length");
    const double n = static_cast<double>(radii.size());
    double mr = 0.0, mq = 0.0;
    for (std::size_t k = 0; k < radii.size(); ++k) mr += radii[k], mq += quotients[k];
    mr /= n;
    mq /= n;
    double srr = 0.0, srq = 0.0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        srr += (radii[k] - mr) * (radii[k] - mr);
        srq += (radii[k] - mr) * (quotients[k] - mq);
    }
    QuotientStudy out;
    out.radii = radii;
    out.quotients = quotients;
    out.slope = srq / srr;
    out.extrapolated = mq - out.slope * mr;
    double ss = 0.0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double res = quotients[k] - (out.extrapolated + out.slope * radii[k]);
        ss += res * res;
    }
    out.fit_residual = std::sqrt(ss / n);
    return out;
}

double difference_quotient(const ProblemSpec& spec, const PerturbationSpec& pert, double r, TagMode mode,
                           const SolverOptions& opts) {
    spec.validate();
    if (!(r > 0.0)) throw InputError("quotient: radius must be positive");
    const PerturbationSpec scaled{pert.shape.with_radius(r), pert.b};
    check_resolution(*spec.mesh, scaled.shape);
    const double j = eval_cost(*spec.mesh, solve_state(spec, opts), spec.target);
    const ProblemSpec spec_r = spec.with_coeff(perturb(spec.coeff, *spec.mesh, scaled, mode));
    const double j_r = eval_cost(*spec.mesh, solve_state(spec_r, opts), spec.target);
    return (j_r - j) / quotient_scale(r);
}

QuotientStudy quotient_sweep(const ProblemSpec& spec, const PerturbationSpec& pert, const std::vector<double>& radii,
                             TagMode mode, const SolverOptions& opts) {
    spec.validate();
    check_ladder(radii);
    check_geometric(radii);
    for (double r : radii) check_resolution(*spec.mesh, pert.shape.with_radius(r));

    const double j = eval_cost(*spec.mesh, solve_state(spec, opts), spec.target);
    std::vector<double> costs(radii.size()), quotients(radii.size());
    parallel_for(static_cast<int>(radii.size()), [&](int k) {
        const PerturbationSpec scaled{pert.shape.with_radius(radii[k]), pert.b};
        const ProblemSpec spec_r = spec.with_coeff(perturb(spec.coeff, *spec.mesh, scaled, mode));
        costs[k] = eval_cost(*spec.mesh, solve_state(spec_r, opts), spec.target);
        quotients[k] = (costs[k] - j) / quotient_scale(radii[k]);
    });
    QuotientStudy out = fit_quotients(radii, quotients);
    out.costs = std::move(costs);
    out.base_cost = j;
    return out;
}

double expansion_identity_residual(const ProblemSpec& spec, const CoefficientField& perturbed,
                                   const SolverOptions& opts) {
    spec.validate();
    const Mesh& mesh = *spec.mesh;
    const ProblemSpec spec_r = spec.with_coeff(perturbed);
    spec_r.validate();
    const FemSolution base = solve(spec, opts);
    const Nodal y_r = solve_state(spec_r, opts);
    const Nodal p_avg = solve_averaged_adjoint(spec_r, y_r, base.y, opts);
    const double dj = eval_cost(mesh, y_r, spec.target) - base.cost;
    const double first = weighted_gradient_product(mesh, perturbed, spec.coeff, base.y, base.p);
    const double second = weighted_gradient_product(mesh, perturbed, spec.coeff, base.y, Nodal(p_avg - base.p));
    return std::abs(dj + first + second) / std::max(1.0, std::abs(dj));
}

double expansion_identity_residual(const ProblemSpec& spec, const PerturbationSpec& pert, double r, TagMode mode,
                                   const SolverOptions& opts) {
    spec.validate();
    if (!(r > 0.0)) throw InputError("identity: radius must be positive");
    const PerturbationSpec scaled{pert.shape.with_radius(r), pert.b};
    check_resolution(*spec.mesh, scaled.shape);
    return expansion_identity_residual(spec, perturb(spec.coeff, *spec.mesh, scaled, mode), opts);
}

PointEvaluation closed_form_reference(const ProblemSpec& spec, const FemSolution& solution,
                                      const PerturbationSpec& pert) {
    const Mesh& mesh = *spec.mesh;
    PointEvaluation out;
    out.element = mesh.locate_element(pert.shape.center);
    const Mat2& a = spec.coeff[out.element];
    if (!isotropic(a) || !isotropic(pert.b))
        throw UnsupportedError("closed form: a(x0) and b must be isotropic");
    out.data.a0 = a(0, 0);
    out.data.b = pert.b(0, 0);
    out.data.gy = element_gradient(mesh, solution.y, out.element);
    out.data.gp = element_gradient(mesh, solution.p, out.element);
    if (pert.shape.is_ball()) {
        out.delta_j = delta_j_ball(out.data);
    } else {
        const EllipseParameters ep = ellipse_parameters(pert.shape.shape_matrix);
        out.delta_j = delta_j_ellipse(out.data, ep.lambda, ep.theta);
    }
    return out;
}

std::string to_string(DescentVerdict v) {
    switch (v) {
        case DescentVerdict::agree: return "agree";
        case DescentVerdict::disagree: return "disagree";
        case DescentVerdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

DescentReport descent_check(const ProblemSpec& spec, const PerturbationSpec& pert, const CostModel& g,
                            const std::vector<double>& radii, TagMode mode, const SolverOptions& opts) {
    spec.validate();
    check_ladder(radii);
    check_geometric(radii);
    for (double r : radii) check_resolution(*spec.mesh, pert.shape.with_radius(r));
    const Mesh& mesh = *spec.mesh;

    const FemSolution base = solve(spec, opts);
    const PointEvaluation point = closed_form_reference(spec, base, pert);
    DescentReport out;
    out.predicted = point.delta_j + g(point.data.b) - g(point.data.a0);

    std::vector<double> changes(radii.size()), quotients(radii.size());
    parallel_for(static_cast<int>(radii.size()), [&](int k) {
        const PerturbationSpec scaled{pert.shape.with_radius(radii[k]), pert.b};
        const CoefficientField a_r = perturb(spec.coeff, mesh, scaled, mode);
        const double j_r = eval_cost(mesh, solve_state(spec.with_coeff(a_r), opts), spec.target);
        changes[k] = j_r - base.cost + cost_term_change(mesh, spec.coeff, a_r, g);
        quotients[k] = changes[k] / quotient_scale(radii[k]);
    });
    out.study = fit_quotients(radii, quotients);
    out.study.costs = changes;
    out.study.base_cost = base.cost;
    out.smallest_radius = radii.back();
    out.observed_change = changes.back();
    out.decrease_observed = out.observed_change < 0.0;

    const double tol = -violation_threshold(g(point.data.b), point.data.gy.dot(point.data.gp));
    if (std::abs(out.predicted) <= std::max(tol, 10.0 * out.study.fit_residual))
        out.verdict = DescentVerdict::inconclusive;
    else if (out.predicted < 0.0)
        out.verdict = out.decrease_observed ? DescentVerdict::agree : DescentVerdict::disagree;
    else
        out.verdict = out.decrease_observed ? DescentVerdict::disagree : DescentVerdict::agree;
    return out;
}

}  // namespace topoderiv
