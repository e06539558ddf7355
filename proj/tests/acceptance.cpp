#include "support.hpp"

#include "topoderiv/exterior.hpp"
#include "topoderiv/oracle.hpp"
#include "topoderiv/pmp.hpp"
#include "topoderiv/topoform.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace topoderiv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

const std::vector<double> benchmark_radii{0.12, 0.09, 0.0675, 0.0506};
constexpr int benchmark_n = 256;

const ProblemSpec& benchmark_problem() {
    static const ProblemSpec spec = testing::unit_problem(benchmark_n);
    return spec;
}

const FemSolution& benchmark_solution() {
    static const FemSolution sol = solve(benchmark_problem());
    return sol;
}

struct OracleRun {
    QuotientStudy study;
    double reference = 0.0;
    double gap = 0.0;
};

OracleRun oracle_run(const PerturbationSpec& pert, TagMode mode = TagMode::area_fraction) {
    OracleRun out;
    out.study = quotient_sweep(benchmark_problem(), pert, benchmark_radii, mode);
    out.reference = closed_form_reference(benchmark_problem(), benchmark_solution(), pert).delta_j;
    out.gap = std::abs(out.study.extrapolated - out.reference) / std::abs(out.reference);
    return out;
}

std::string describe(const OracleRun& r) {
    return "extrapolated " + num(r.study.extrapolated) + ", closed form " + num(r.reference) + ", relative gap " +
           num(r.gap) + ", fit residual " + num(r.study.fit_residual);
}

InclusionShape shape_2_half(const Vec2& center, double theta) {
    const Mat2 r = rotation(theta);
    return {center, 1.0, r.transpose() * Vec2(2.0, 0.5).asDiagonal() * r};
}

Outcome ball_oracle(const Vec2& x0, double time_limit) {
    const auto t0 = Clock::now();
    const OracleRun r = oracle_run({InclusionShape::ball(x0, 1.0), 2.0 * Mat2::Identity()});
    const double t = seconds_since(t0);
    return {r.gap <= 0.05 && t <= time_limit, describe(r) + ", " + num(t) + " s"};
}

Outcome ellipse_oracle(const Vec2& x0, const std::vector<double>& thetas, double time_limit) {
    const auto t0 = Clock::now();
    bool pass = true;
    std::string detail;
    for (double theta : thetas) {
        const OracleRun r = oracle_run({shape_2_half(x0, theta), 2.0 * Mat2::Identity()});
        pass &= r.gap <= 0.05;
        detail += "theta " + num(theta) + ": " + describe(r) + "; ";
    }
    const double t = seconds_since(t0);
    return {pass && t <= time_limit, detail + num(t) + " s"};
}

Outcome criterion_1() { return ball_oracle({0.5, 0.5}, 120.0); }

Outcome criterion_2() { return ellipse_oracle({0.5, 0.5}, {0.0, pi / 4}, 240.0); }

Outcome criterion_3() {
    const auto t0 = Clock::now();
    const ProblemSpec spec = testing::unit_problem(64);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> center(0.42, 0.58), radius(0.18, 0.25), lambda(1.0, 2.0), angle(0.0, pi);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
        const Mat2 b = testing::random_admissible(rng, 1.0, k % 2 == 1);
        const InclusionShape shape = InclusionShape::ellipse({center(rng), center(rng)}, 1.0, lambda(rng), angle(rng));
        worst = std::max(worst, expansion_identity_residual(spec, {shape, b}, radius(rng)));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-9 && t <= 30.0, "max residual " + num(worst) + " over 5 perturbations, " + num(t) + " s"};
}

ExteriorConfig ball_exterior(double truncation) {
    ExteriorConfig c;
    c.shape = InclusionShape::ball({0.0, 0.0}, 1.0);
    c.a0 = Mat2::Identity();
    c.b = 2.0 * Mat2::Identity();
    c.truncation_radius = truncation;
    return c;
}

Outcome criterion_4() {
    const auto t0 = Clock::now();
    const Vec2 exact(-1.0 / 3.0, 0.0);
    double gaps[2];
    std::string detail;
    for (int k = 0; k < 2; ++k) {
        const ExteriorProblem p(ball_exterior(k == 0 ? 20.0 : 40.0));
        const GradientStats st = inclusion_gradient_stats(p, p.solve_K({1.0, 0.0}).field);
        gaps[k] = (st.mean - exact).norm() / exact.norm();
        detail += "R=" + num(p.config().truncation_radius) + ": mean (" + num(st.mean.x()) + ", " + num(st.mean.y()) +
                  "), gap " + num(gaps[k]) + "; ";
    }
    const double t = seconds_since(t0);
    const double ratio = gaps[0] / gaps[1];
    return {gaps[0] <= 0.05 && ratio >= 1.7 && t <= 60.0, detail + "ratio " + num(ratio) + ", " + num(t) + " s"};
}

Outcome criterion_5() {
    std::mt19937_64 rng(55);
    double worst_sym = 0.0, worst_psd = 0.0;
    for (int k = 0; k < 10; ++k) {
        ExteriorConfig c = ball_exterior(20.0);
        c.a0 = testing::random_admissible(rng, 1.0, true);
        c.b = testing::random_admissible(rng, 1.0, true);
        const Mat2 r = sensitivity_matrix(c);
        worst_sym = std::max(worst_sym, (r - r.transpose()).norm() / r.norm());
        worst_psd = std::min(worst_psd, sym_min_eigenvalue(r) / r.norm());
    }
    const double a0 = 1.0, b = 2.0;
    const Mat2 r = sensitivity_matrix(ball_exterior(20.0));
    const Mat2 expected = (b - a0) * (b - a0) * pi / (a0 + b) * Mat2::Identity();
    const double ball_gap = (r - expected).norm() / expected.norm();
    return {worst_sym <= 1e-8 && worst_psd >= -1e-8 && ball_gap <= 0.05,
            "max asymmetry " + num(worst_sym) + ", min scaled eigenvalue " + num(worst_psd) + ", ball gap " + num(ball_gap)};
}

std::vector<double> lambda_grid() {
    std::vector<double> out(64);
    for (int i = 0; i < 64; ++i) out[i] = std::pow(10.0, -3.0 + 6.0 * i / 63.0);
    return out;
}

Outcome criterion_6() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> coef(0.5, 2.0);
    const auto lambdas = lambda_grid();
    int outside = 0;
    double worst_approach = 0.0;
    for (int k = 0; k < 100; ++k) {
        const ScalarPointData d{coef(rng), coef(rng), testing::random_vec(rng), testing::random_vec(rng)};
        const Interval iv = delta_j_ellipse_range(d).closure;
        const double tol = 1e-12 * (1.0 + std::abs(iv.lo) + std::abs(iv.hi));
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double l : lambdas)
            for (int j = 0; j < 256; ++j) {
                const double v = delta_j_ellipse(d, l, pi * j / 256.0);
                outside += !iv.contains(v, tol);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const double scale = std::max(std::abs(iv.lo), std::abs(iv.hi));
        worst_approach = std::max({worst_approach, std::abs(lo - iv.lo) / scale, std::abs(hi - iv.hi) / scale});
    }
    const double t = seconds_since(t0);
    return {outside == 0 && worst_approach <= 0.01 && t <= 10.0,
            std::to_string(outside) + " samples outside, worst relative endpoint distance " + num(worst_approach) + ", " +
                num(t) + " s"};
}

Outcome criterion_7() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> lam(-3.0, 3.0), angle(0.0, 2.0 * pi);
    std::bernoulli_distribution reflect(0.5);
    int outside = 0;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double l1 = lam(rng), l2 = lam(rng);
        const Vec2 y = testing::random_vec(rng), p = testing::random_vec(rng);
        const Interval iv = rotation_range(l1, l2, y, p);
        const Mat2 d = Vec2(l1, l2).asDiagonal();
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int s = 0; s < 100000; ++s) {
            Mat2 r = rotation(angle(rng));
            if (reflect(rng)) r.row(1) *= -1.0;
            const double v = p.dot(r.transpose() * d * r * y);
            outside += !iv.contains(v, 1e-13);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        worst = std::max({worst, std::abs(lo - iv.lo), std::abs(hi - iv.hi)});
    }
    return {outside == 0 && worst <= 1e-3, std::to_string(outside) + " samples outside, worst endpoint distance " + num(worst)};
}

Outcome criterion_8() {
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> u(-3.0, 3.0), coef(0.2, 5.0), slack(0.0, 2.0);
    int counterexamples = 0, premises = 0;
    for (int k = 0; k < 100000; ++k) {
        const double s = u(rng), n = std::abs(s) + slack(rng), a0 = coef(rng), b = coef(rng);
        const CostModel g = CostModel::linear(u(rng), 0.1);
        if (pmp_scalar2d_residual(s, n, a0, b, g) >= 0.0) {
            ++premises;
            counterexamples += pmp_scalar_residual(s, a0, b, 2, g) < 0.0;
        }
    }
    return {counterexamples == 0,
            std::to_string(counterexamples) + " counterexamples among " + std::to_string(premises) + " tuples with nonnegative 2d residual"};
}

Outcome criterion_9() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-3.0, 3.0), coef(0.5, 2.0);
    const std::vector<double> ts{1e-3, 1e-4, 1e-5};
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double s = u(rng), a0 = coef(rng), b = coef(rng);
        const CostModel g = CostModel::linear(u(rng), 0.1);
        // least-squares line through (t, residual/t)
        double mt = 0.0, mv = 0.0;
        std::vector<double> v;
        for (double t : ts) v.push_back(pmp_scalar_residual(s, a0, a0 + t * (b - a0), 2, g) / t);
        for (std::size_t i = 0; i < ts.size(); ++i) mt += ts[i] / 3.0, mv += v[i] / 3.0;
        double stt = 0.0, stv = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) stt += (ts[i] - mt) * (ts[i] - mt), stv += (ts[i] - mt) * (v[i] - mv);
        const double limit = mv - stv / stt * mt;
        worst = std::max(worst, std::abs(limit - frechet_residual(s, a0, b, g)));
    }
    return {worst <= 1e-6, "max deviation " + num(worst) + " over 100 tuples"};
}

Outcome criterion_10() {
    const auto t0 = Clock::now();
    const double alpha = 1.0, beta = 2.0;
    auto mesh = testing::unit_mesh(benchmark_n);
    std::vector<double> values(mesh->num_elements());
    for (int e = 0; e < mesh->num_elements(); ++e)
        values[e] = (mesh->element_centroid(e) - Vec2(0.5, 0.5)).norm() < 0.3 ? alpha : beta;
    const ProblemSpec spec{mesh, isotropic_field(*mesh, values, {alpha}),
                           Source::nodal(std::vector<double>(mesh->num_vertices(), 1.0)), Nodal::Zero(mesh->num_vertices())};
    const FemSolution sol = solve(spec);

    // slope below the largest s in the alpha region, so some alpha elements break "l < s requires a0 = beta"
    double s_max = 0.0;
    for (int e = 0; e < mesh->num_elements(); ++e)
        if (values[e] == alpha)
            s_max = std::max(s_max, element_gradient(*mesh, sol.y, e).dot(element_gradient(*mesh, sol.p, e)));
    const double ell = 0.2 * s_max;
    const CostModel g = CostModel::linear(ell, alpha, beta);
    const PMPReport report = pmp_field_report(spec, sol, default_b_grid(alpha, beta), g);

    int mismatched = 0, target_clause = 0;
    for (const auto& r : report.records) {
        const Classification c = linear_g_classify(r.s, r.n, ell, alpha, beta, r.a0);
        mismatched += r.violates_scalar2d != (c.tag == LinearClass::violated);
        target_clause += c.failed_clause == "l < s requires a0 = beta";
    }
    const auto worst = report.worst_offenders(1);
    if (worst.empty()) return {false, "no violations flagged"};
    const PMPRecord& w = report.records[worst.front()];
    const PerturbationSpec pert{InclusionShape::ball(w.x0, 1.0), w.argmin_scalar * Mat2::Identity()};
    const DescentReport d = descent_check(spec, pert, g, benchmark_radii);
    const double t = seconds_since(t0);
    return {mismatched == 0 && target_clause > 0 && d.verdict == DescentVerdict::agree && d.decrease_observed,
            std::to_string(report.scalar2d_violations) + " flagged, " + std::to_string(mismatched) + " mismatches, " +
                std::to_string(target_clause) + " break the a0 = beta clause; worst element " + std::to_string(w.element) +
                " at (" + num(w.x0.x()) + ", " + num(w.x0.y()) + ") b = " + num(w.argmin_scalar) + ": predicted " +
                num(d.predicted) + ", observed change " + num(d.observed_change) + ", verdict " + to_string(d.verdict) +
                ", " + num(t) + " s"};
}

Outcome criterion_11() {
    double previous = 0.0;
    double lo = 1e300, hi = 0.0;
    std::string ratios;
    for (int n : {16, 32, 64, 128}) {
        auto mesh = testing::unit_mesh(n);
        auto exact = [](const Vec2& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); };
        const Nodal f = interpolate(*mesh, [&](const Vec2& p) { return 2.0 * pi * pi * exact(p); });
        const ProblemSpec spec{mesh, constant_field(*mesh, Mat2::Identity(), {1.0}),
                               Source::nodal({f.data(), f.data() + f.size()}), Nodal::Zero(mesh->num_vertices())};
        const double err = l2_error(*mesh, solve_state(spec), exact);
        if (previous > 0.0) {
            lo = std::min(lo, previous / err);
            hi = std::max(hi, previous / err);
            ratios += num(previous / err) + " ";
        }
        previous = err;
    }
    return {lo >= 3.6 && hi <= 4.4, "error ratios " + ratios};
}

const Vec2 off_center(0.3, 0.4);

Outcome supplementary_ball() { return ball_oracle(off_center, 120.0); }

Outcome supplementary_ellipse() { return ellipse_oracle(off_center, {0.0, pi / 6, pi / 4}, 360.0); }

const OracleRun& off_center_ball() {
    static const OracleRun r = oracle_run({InclusionShape::ball(off_center, 1.0), 2.0 * Mat2::Identity()});
    return r;
}

Outcome supplementary_modes() {
    const OracleRun& area = off_center_ball();
    const OracleRun centroid = oracle_run({InclusionShape::ball(off_center, 1.0), 2.0 * Mat2::Identity()}, TagMode::centroid);
    const double diff = std::abs(area.study.extrapolated - centroid.study.extrapolated);
    const double bound = 2.0 * std::max(area.study.fit_residual, centroid.study.fit_residual);
    return {diff <= bound, "area_fraction " + num(area.study.extrapolated) + ", centroid " + num(centroid.study.extrapolated) +
                               ", difference " + num(diff) + ", bound " + num(bound)};
}

Outcome supplementary_stability() {
    const QuotientStudy& s = off_center_ball().study;
    bool pass = true;
    std::string ratios;
    for (std::size_t k = 1; k + 1 < s.quotients.size(); ++k) {
        const double ratio = std::abs(s.quotients[k + 1] - s.extrapolated) / std::abs(s.quotients[k] - s.extrapolated);
        pass &= ratio <= 0.9;
        ratios += num(ratio) + " ";
    }
    return {pass, "successive distance ratios " + ratios};
}

struct Check {
    std::string id;
    std::string title;
    std::function<Outcome()> run;
};

const std::vector<Check>& checks() {
    static const std::vector<Check> all{
        {"1", "ball formula vs oracle at (0.5, 0.5)", criterion_1},
        {"2", "ellipse formula vs oracle at (0.5, 0.5), theta in {0, pi/4}", criterion_2},
        {"3", "discrete expansion identity", criterion_3},
        {"4", "explicit exterior solution and truncation", criterion_4},
        {"5", "sensitivity matrix symmetry, PSD and ball value", criterion_5},
        {"6", "ellipse range interval", criterion_6},
        {"7", "rotation range", criterion_7},
        {"8", "PMP implication", criterion_8},
        {"9", "Frechet limit", criterion_9},
        {"10", "linear-g audit and descent", criterion_10},
        {"11", "FEM second-order convergence", criterion_11},
        {"S1", "supplementary: ball oracle at (0.3, 0.4)", supplementary_ball},
        {"S2", "supplementary: ellipse oracle at (0.3, 0.4), theta in {0, pi/6, pi/4}", supplementary_ellipse},
        {"S3", "supplementary: centroid vs area_fraction tagging at (0.3, 0.4)", supplementary_modes},
        {"S4", "supplementary: quotient stability at (0.3, 0.4)", supplementary_stability},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> selected;
    for (int i = 1; i < argc; ++i) selected.insert(argv[i]);
    int failures = 0;
    for (const Check& c : checks()) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << ": " << c.title << " | " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
