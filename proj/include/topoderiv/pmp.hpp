#pragma once

#include "topoderiv/fem.hpp"
#include "topoderiv/topoform.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace topoderiv {

/// Scalar coefficient cost g on the feasible range [alpha, beta]; +inf outside.
class CostModel {
public:
    enum class Kind { linear, tabulated };

    /// g(b) = slope·b.
    static CostModel linear(double slope, double alpha, double beta = std::numeric_limits<double>::infinity());

    /// Piecewise-linear interpolation of sorted (b, g(b)) pairs. The table
    /// must cover the points where g is evaluated; outside it g = +inf.
    static CostModel tabulated(std::vector<std::pair<double, double>> table, double alpha,
                               double beta = std::numeric_limits<double>::infinity(),
                               std::function<double(double)> derivative = {});

    Kind kind() const { return kind_; }
    double slope() const { return slope_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

    double operator()(double b) const;
    bool has_derivative() const { return kind_ == Kind::linear || static_cast<bool>(derivative_); }
    /// g′(a); throws UnsupportedError for a tabulated cost without derivative.
    double derivative(double a) const;

private:
    Kind kind_ = Kind::linear;
    double slope_ = 0.0;
    double alpha_ = 0.0;
    double beta_ = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> table_;
    std::function<double(double)> derivative_;
};

/// −(b−a₀)s·a₀d/(b+a₀(d−1)) + g(b) − g(a₀); the condition holds iff ≥ 0.
double pmp_scalar_residual(double s, double a0, double b, int d, const CostModel& g);

/// −(b−a₀)s + g(b) − g(a₀) + ½(b−a₀)²/b·(s − n). Rejects n < |s|.
double pmp_scalar2d_residual(double s, double n, double a0, double b, const CostModel& g);

/// −(b−a₀)∇y·(∇p + moment/|ω|) + g(b) − g(a₀) for isotropic a₀, b.
double pmp_general_residual(const MatrixPointData& data, const Vec2& q_moment, double omega_measure,
                            const CostModel& g);

/// (−s + g′(a₀))(b − a₀).
double frechet_residual(double s, double a0, double b, double g_prime);
double frechet_residual(double s, double a0, double b, const CostModel& g);

/// Residual below −1e-8·(1 + |g(b)| + |s|) counts as a violation.
double violation_threshold(double g_b, double s);

enum class LinearClass { consistent_at_alpha, consistent_at_beta, consistent_parallel, violated };

struct Classification {
    LinearClass tag = LinearClass::violated;
    std::string failed_clause;  ///< empty unless violated
};

/// Clause check for g(a) = ℓa on [α, β].
Classification linear_g_classify(double s, double n, double ell, double alpha, double beta, double a0);

std::string to_string(LinearClass c);

struct PMPRecord {
    int element = 0;
    Vec2 x0 = Vec2::Zero();
    double s = 0.0;
    double n = 0.0;
    double a0 = 0.0;
    double min_scalar = 0.0;
    double argmin_scalar = 0.0;
    double min_scalar2d = 0.0;
    double argmin_scalar2d = 0.0;
    double frechet = std::numeric_limits<double>::quiet_NaN();  ///< NaN when g′ is unavailable
    bool violates_scalar = false;
    bool violates_scalar2d = false;
    bool violates_frechet = false;
    std::string classification;
};

struct PMPReport {
    std::vector<PMPRecord> records;
    int scalar_violations = 0;
    int scalar2d_violations = 0;
    int frechet_violations = 0;

    /// Element ids ordered by min_scalar2d ascending (ties by id), violations only.
    std::vector<int> worst_offenders(std::size_t limit) const;
};

/// 64 log-spaced values on [α, β] plus the endpoints, sorted.
std::vector<double> default_b_grid(double alpha, double beta);

/// Minimizes each residual over b_grid ∪ {a(x₀)} for every element.
PMPReport pmp_field_report(const ProblemSpec& spec, const FemSolution& solution, const std::vector<double>& b_grid,
                           const CostModel& g);

}  // namespace topoderiv
