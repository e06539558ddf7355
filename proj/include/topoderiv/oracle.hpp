#pragma once

#include "topoderiv/coeff.hpp"
#include "topoderiv/fem.hpp"
#include "topoderiv/pmp.hpp"

#include <vector>

namespace topoderiv {

/// Least-squares fit q(r) = c₀ + c₁r over a radius ladder.
struct QuotientStudy {
    std::vector<double> radii;
    std::vector<double> costs;  ///< perturbed cost per rung (empty for synthetic data)
    std::vector<double> quotients;
    double base_cost = 0.0;
    double extrapolated = 0.0;  ///< c₀
    double slope = 0.0;         ///< c₁
    double fit_residual = 0.0;  ///< RMS of the fit residuals

    /// Residual above 10% of |c₀|.
    bool poor_fit() const { return fit_residual > 0.1 * std::abs(extrapolated); }
};

/// Fit only; radii must be strictly decreasing with at least 4 entries.
QuotientStudy fit_quotients(const std::vector<double>& radii, const std::vector<double>& quotients);

/// (J(a_r) − J(a))/(r²π) on the fixed mesh of spec.
double difference_quotient(const ProblemSpec& spec, const PerturbationSpec& pert, double r,
                           TagMode mode = TagMode::area_fraction, const SolverOptions& opts = {});

/// Quotients along a geometric ladder (ratio ≤ 0.75, r/h ≥ 8), rungs solved concurrently.
QuotientStudy quotient_sweep(const ProblemSpec& spec, const PerturbationSpec& pert, const std::vector<double>& radii,
                             TagMode mode = TagMode::area_fraction, const SolverOptions& opts = {});

/// |J(a_r)−J(a) + ∫(a_r−a)∇y·∇p + ∫(a_r−a)∇y·∇(p̃_r−p)| / max(1, |J(a_r)−J(a)|).
double expansion_identity_residual(const ProblemSpec& spec, const PerturbationSpec& pert, double r,
                                   TagMode mode = TagMode::area_fraction, const SolverOptions& opts = {});

/// Same, for an arbitrary perturbed coefficient on the same mesh.
double expansion_identity_residual(const ProblemSpec& spec, const CoefficientField& perturbed,
                                   const SolverOptions& opts = {});

/// Closed-form δJ at the perturbation center from element gradients, for
/// isotropic a(x₀), b and a ball or ellipse inclusion.
struct PointEvaluation {
    ScalarPointData data;
    int element = 0;
    double delta_j = 0.0;
};
PointEvaluation closed_form_reference(const ProblemSpec& spec, const FemSolution& solution,
                                      const PerturbationSpec& pert);

enum class DescentVerdict { agree, disagree, inconclusive };
std::string to_string(DescentVerdict v);

struct DescentReport {
    double predicted = 0.0;  ///< δJ + g(b) − g(a(x₀))
    double smallest_radius = 0.0;
    double observed_change = 0.0;  ///< J̃(a_r) − J̃(a) at the smallest radius
    bool decrease_observed = false;
    QuotientStudy study;  ///< quotients of J̃
    DescentVerdict verdict = DescentVerdict::inconclusive;
};

/// J̃ = J + ∫g(a); compares the predicted first-order sign with the observed change.
DescentReport descent_check(const ProblemSpec& spec, const PerturbationSpec& pert, const CostModel& g,
                            const std::vector<double>& radii, TagMode mode = TagMode::area_fraction,
                            const SolverOptions& opts = {});

}  // namespace topoderiv
