#include "topoderiv/pmp.hpp"

#include "topoderiv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace topoderiv {

CostModel CostModel::linear(double slope, double alpha, double beta) {
    if (!std::isfinite(slope)) throw InputError("cost: slope must be finite");
    if (!(alpha > 0.0) || !(beta >= alpha)) throw InputError("cost: feasible range must satisfy 0 < alpha <= beta");
    CostModel g;
    g.kind_ = Kind::linear;
    g.slope_ = slope;
    g.alpha_ = alpha;
    g.beta_ = beta;
    return g;
}

CostModel CostModel::tabulated(std::vector<std::pair<double, double>> table, double alpha, double beta,
                               std::function<double(double)> derivative) {
    if (!(alpha > 0.0) || !(beta >= alpha)) throw InputError("cost: feasible range must satisfy 0 < alpha <= beta");
    if (table.size() < 2) throw InputError("cost: table needs at least two points");
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!(table[i].first >= alpha)) throw InputError("cost: table abscissae must be >= alpha");
        if (!std::isfinite(table[i].second)) throw InputError("cost: table values must be finite");
        if (i > 0 && !(table[i].first > table[i - 1].first))
            throw InputError("cost: table abscissae must be strictly increasing");
    }
    CostModel g;
    g.kind_ = Kind::tabulated;
    g.alpha_ = alpha;
    g.beta_ = beta;
    g.table_ = std::move(table);
    g.derivative_ = std::move(derivative);
    return g;
}

double CostModel::operator()(double b) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double slack = 1e-12 * std::max(1.0, std::abs(b));
    if (b < alpha_ - slack || b > beta_ + slack) return inf;
    if (kind_ == Kind::linear) return slope_ * b;
    if (b < table_.front().first || b > table_.back().first) return inf;
    auto it = std::lower_bound(table_.begin(), table_.end(), b, [](const auto& p, double v) { return p.first < v; });
    if (it->first == b) return it->second;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (b - lo.first) / (hi.first - lo.first);
    return (1.0 - w) * lo.second + w * hi.second;
}

double CostModel::derivative(double a) const {
    if (kind_ == Kind::linear) return slope_;
    if (!derivative_) throw UnsupportedError("cost: tabulated cost has no derivative");
    return derivative_(a);
}

double pmp_scalar_residual(double s, double a0, double b, int d, const CostModel& g) {
    if (d < 1 || d > 3) throw InputError("pmp: dimension must be 1, 2 or 3");
    if (b == a0) return 0.0;
    return -(b - a0) * s * a0 * d / (b + a0 * (d - 1)) + g(b) - g(a0);
}

double pmp_scalar2d_residual(double s, double n, double a0, double b, const CostModel& g) {
    if (n < std::abs(s)) throw InputError("pmp: n < |s| violates Cauchy-Schwarz");
    if (b == a0) return 0.0;
    return -(b - a0) * s + g(b) - g(a0) + 0.5 * (b - a0) * (b - a0) / b * (s - n);
}

double pmp_general_residual(const MatrixPointData& data, const Vec2& q_moment, double omega_measure,
                            const CostModel& g) {
    if (data.b == data.a0) return 0.0;
    auto scalar_of = [](const Mat2& m) {
        if (m(0, 1) != 0.0 || m(1, 0) != 0.0 || m(0, 0) != m(1, 1))
            throw UnsupportedError("pmp: cost models are defined for isotropic coefficients only");
        return m(0, 0);
    };
    const double cost = g(scalar_of(data.b)) - g(scalar_of(data.a0));
    return delta_j_general(data, q_moment, omega_measure) + cost;
}

double frechet_residual(double s, double a0, double b, double g_prime) { return (-s + g_prime) * (b - a0); }

double frechet_residual(double s, double a0, double b, const CostModel& g) {
    return frechet_residual(s, a0, b, g.derivative(a0));
}

double violation_threshold(double g_b, double s) { return -1e-8 * (1.0 + std::abs(g_b) + std::abs(s)); }

std::string to_string(LinearClass c) {
    switch (c) {
        case LinearClass::consistent_at_alpha: return "consistent-at-alpha";
        case LinearClass::consistent_at_beta: return "consistent-at-beta";
        case LinearClass::consistent_parallel: return "consistent-parallel";
        case LinearClass::violated: return "violated";
    }
    return "violated";
}

Classification linear_g_classify(double s, double n, double ell, double alpha, double beta, double a0) {
    if (n < std::abs(s)) throw InputError("classify: n < |s| violates Cauchy-Schwarz");
    if (!(alpha > 0.0) || !(beta >= alpha)) throw InputError("classify: need 0 < alpha <= beta");
    const double scale = std::max(1.0, beta);
    if (a0 < alpha - 1e-12 * scale || a0 > beta + 1e-12 * scale) throw InputError("classify: a0 outside [alpha, beta]");
    const double tol = 1e-8 * (1.0 + std::abs(ell) + std::abs(s));
    const bool at_alpha = std::abs(a0 - alpha) <= 1e-12 * scale;
    const bool at_beta = std::abs(a0 - beta) <= 1e-12 * scale;
    const double gap = ell - s;

    if (gap > tol && !at_alpha) return {LinearClass::violated, "l > s requires a0 = alpha"};
    if (gap < -tol && !at_beta) return {LinearClass::violated, "l < s requires a0 = beta"};
    if (std::abs(gap) <= tol && n - s > tol) return {LinearClass::violated, "l = s requires n = s"};
    if (at_alpha && gap < 0.5 * (beta - alpha) / beta * (n - s) - tol)
        return {LinearClass::violated, "l - s >= (beta - alpha)/(2 beta) (n - s) at a0 = alpha"};
    if (at_beta && gap > 0.5 * (alpha - beta) / alpha * (n - s) + tol)
        return {LinearClass::violated, "l - s <= (alpha - beta)/(2 alpha) (n - s) at a0 = beta"};
    if (std::abs(gap) <= tol) return {LinearClass::consistent_parallel, {}};
    return {gap > 0.0 ? LinearClass::consistent_at_alpha : LinearClass::consistent_at_beta, {}};
}

std::vector<int> PMPReport::worst_offenders(std::size_t limit) const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].violates_scalar2d) idx.push_back(static_cast<int>(i));
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return records[a].min_scalar2d < records[b].min_scalar2d; });
    if (idx.size() > limit) idx.resize(limit);
    for (int& i : idx) i = records[i].element;
    return idx;
}

std::vector<double> default_b_grid(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > alpha) || !std::isfinite(beta))
        throw InputError("b grid: need 0 < alpha < beta < inf");
    std::vector<double> grid(64);
    for (int k = 0; k < 64; ++k) grid[k] = alpha * std::pow(beta / alpha, k / 63.0);
    grid.front() = alpha;
    grid.back() = beta;
    return grid;
}

PMPReport pmp_field_report(const ProblemSpec& spec, const FemSolution& solution, const std::vector<double>& b_grid,
                           const CostModel& g) {
    spec.validate();
    const Mesh& mesh = *spec.mesh;
    if (!spec.coeff.is_isotropic()) throw UnsupportedError("pmp report: scalar conditions need an isotropic field");
    if (b_grid.empty()) throw InputError("pmp report: empty b grid");
    const double slack = 1e-12 * std::max(1.0, g.beta() < 1e300 ? g.beta() : 1.0);
    for (double b : b_grid)
        if (!(b >= g.alpha() - slack) || !(b <= g.beta() + slack))
            throw InputError("pmp report: b grid must lie inside [alpha, beta]");

    PMPReport report;
    report.records.resize(mesh.num_elements());
    const bool has_derivative = g.has_derivative();
    const int n_el = mesh.num_elements();
    const int chunks = worker_count(n_el);
    parallel_for(chunks, [&](int c) {
        for (int e = c; e < n_el; e += chunks) {
            PMPRecord& rec = report.records[e];
            const Vec2 gy = element_gradient(mesh, solution.y, e);
            const Vec2 gp = element_gradient(mesh, solution.p, e);
            rec.element = e;
            rec.x0 = mesh.element_centroid(e);
            rec.s = gy.dot(gp);
            rec.n = std::max(gy.norm() * gp.norm(), std::abs(rec.s));
            rec.a0 = spec.coeff.scalar(e);

            std::vector<double> grid = b_grid;
            grid.push_back(rec.a0);
            std::sort(grid.begin(), grid.end());
            grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

            rec.min_scalar = rec.min_scalar2d = std::numeric_limits<double>::infinity();
            double min_frechet = std::numeric_limits<double>::infinity(), argmin_frechet = rec.a0;
            const double g_prime = has_derivative ? g.derivative(rec.a0) : 0.0;
            for (double b : grid) {
                const double r1 = pmp_scalar_residual(rec.s, rec.a0, b, 2, g);
                const double r2 = pmp_scalar2d_residual(rec.s, rec.n, rec.a0, b, g);
                if (r1 < rec.min_scalar) rec.min_scalar = r1, rec.argmin_scalar = b;
                if (r2 < rec.min_scalar2d) rec.min_scalar2d = r2, rec.argmin_scalar2d = b;
                if (has_derivative) {
                    const double r3 = frechet_residual(rec.s, rec.a0, b, g_prime);
                    if (r3 < min_frechet) min_frechet = r3, argmin_frechet = b;
                }
            }
            rec.violates_scalar = rec.min_scalar < violation_threshold(g(rec.argmin_scalar), rec.s);
            rec.violates_scalar2d = rec.min_scalar2d < violation_threshold(g(rec.argmin_scalar2d), rec.s);
            if (has_derivative) {
                rec.frechet = min_frechet;
                rec.violates_frechet = min_frechet < violation_threshold(g(argmin_frechet), rec.s);
            }
            if (g.kind() == CostModel::Kind::linear && std::isfinite(g.beta()))
                rec.classification = to_string(linear_g_classify(rec.s, rec.n, g.slope(), g.alpha(), g.beta(), rec.a0).tag);
            else
                rec.classification = rec.violates_scalar2d ? "violated" : "consistent";
        }
    });
    for (const auto& rec : report.records) {
        report.scalar_violations += rec.violates_scalar;
        report.scalar2d_violations += rec.violates_scalar2d;
        report.frechet_violations += rec.violates_frechet;
    }
    return report;
}

}  // namespace topoderiv
