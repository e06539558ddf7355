#include "topoderiv/cli.hpp"

#include "topoderiv/exterior.hpp"
#include "topoderiv/io.hpp"
#include "topoderiv/oracle.hpp"
#include "topoderiv/parallel.hpp"
#include "topoderiv/topoform.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <map>

namespace topoderiv::cli {

namespace {

namespace fs = std::filesystem;
using io::fmt;

struct Context {
    RunConfig cfg;
    fs::path dir;
    std::ostream& out;
    std::ostream& err;
};

void write_footer(std::ostream& os, const std::string& key, double value) { os << "# " << key << ',' << fmt(value) << '\n'; }

void warn_conditioning(const Context& ctx, const CoefficientField& coeff) {
    const double cond = coeff.condition_number();
    if (cond > 1e8) ctx.err << "warning: coefficient condition number " << fmt(cond) << " exceeds 1e8\n";
}

int cmd_solve(Context& ctx) {
    const ProblemSpec spec = build_problem(ctx.cfg);
    warn_conditioning(ctx, spec.coeff);
    const FemSolution sol = solve(spec);
    const Mesh& mesh = *spec.mesh;

    io::write_mesh_csv(ctx.dir, mesh);
    io::write_coefficient_csv(ctx.dir / "coefficient.csv", spec.coeff.values());
    io::write_nodal_csv(ctx.dir / "state.csv", sol.y, "y");
    io::write_nodal_csv(ctx.dir / "adjoint.csv", sol.p, "p");
    {
        auto s = io::open_out(ctx.dir / "summary.csv");
        s << "key,value\n";
        s << "cost," << fmt(sol.cost) << '\n';
        s << "vertices," << mesh.num_vertices() << '\n';
        s << "elements," << mesh.num_elements() << '\n';
        s << "condition_number," << fmt(spec.coeff.condition_number()) << '\n';
    }
    if (ctx.cfg.output.vtk) {
        std::vector<double> a11(mesh.num_elements());
        for (int e = 0; e < mesh.num_elements(); ++e) a11[e] = spec.coeff[e](0, 0);
        io::write_vtk(ctx.dir / "solution.vtk", mesh, {{"a11", a11}}, {{"y", sol.y}, {"p", sol.p}, {"y_d", spec.target}});
    }
    ctx.out << "J = " << fmt(sol.cost) << '\n';

    const auto& pb = ctx.cfg.problem;
    if (pb.f.kind == FieldSpec::Kind::sin_product) {
        auto c = io::open_out(ctx.dir / "convergence.csv");
        c << "n,h,l2_error,ratio\n";
        double previous = std::nan("");
        for (int level = 0; level < 4; ++level) {
            RunConfig lc = ctx.cfg;
            lc.problem.refinements += level;
            const ProblemSpec ls = build_problem(lc);
            const Nodal y = solve_state(ls);
            const double err = l2_error(*ls.mesh, y, [&](const Vec2& x) { return pb.f(x, pb.domain); });
            const int n = pb.n << lc.problem.refinements;
            const double h = (pb.domain.hi.x() - pb.domain.lo.x()) / n;
            c << n << ',' << fmt(h) << ',' << fmt(err) << ',' << fmt(previous / err) << '\n';
            ctx.out << "n = " << n << "  L2 error = " << fmt(err) << '\n';
            previous = err;
        }
    }
    return ok;
}

int cmd_tderiv(Context& ctx) {
    const ProblemSpec spec = build_problem(ctx.cfg);
    warn_conditioning(ctx, spec.coeff);
    const FemSolution sol = solve(spec);
    const Mesh& mesh = *spec.mesh;
    const auto& pt = ctx.cfg.perturbation;
    const InclusionShape unit = perturbation_shape(ctx.cfg).with_center({0.0, 0.0});
    const EllipseParameters ep = ellipse_parameters(unit.shape_matrix);

    std::map<std::pair<double, double>, Mat2> moment_maps;
    auto moment_map = [&](const Mat2& a0) -> const Mat2& {
        const auto key = std::make_pair(a0(0, 0), a0(1, 1));
        auto it = moment_maps.find(key);
        if (it != moment_maps.end() && a0.isDiagonal(0.0)) return it->second;
        ExteriorConfig ec;
        ec.shape = unit;
        ec.a0 = a0;
        ec.b = pt.b;
        ec.truncation_radius = ctx.cfg.exterior.truncation_radius;
        ec.boundary_segments = ctx.cfg.exterior.boundary_segments;
        ec.growth = ctx.cfg.exterior.growth;
        ec.params = {ctx.cfg.problem.alpha};
        const Mat2 t = ExteriorProblem(ec).q_moment_map();
        return moment_maps[key] = t;
    };

    auto csv = io::open_out(ctx.dir / "tderiv.csv");
    csv << "x,y,a0,b,gy_x,gy_y,gp_x,gp_y,delta_j_ball,delta_j_ellipse,delta_j_general\n";
    for (const Vec2& x : ctx.cfg.tderiv.points) {
        const int e = mesh.locate_element(x);
        const Mat2& a0 = spec.coeff[e];
        const Vec2 gy = element_gradient(mesh, sol.y, e), gp = element_gradient(mesh, sol.p, e);
        const bool iso = a0(0, 1) == 0.0 && a0(1, 0) == 0.0 && a0(0, 0) == a0(1, 1) && pt.b(0, 1) == 0.0 &&
                         pt.b(1, 0) == 0.0 && pt.b(0, 0) == pt.b(1, 1);
        double ball = std::nan(""), ell = std::nan(""), general = std::nan("");
        if (iso) {
            const ScalarPointData d{a0(0, 0), pt.b(0, 0), gy, gp};
            ball = delta_j_ball(d);
            ell = delta_j_ellipse(d, ep.lambda, ep.theta);
        }
        if (ctx.cfg.tderiv.general) {
            const Mat2 t = moment_map(a0);
            general = delta_j_general({a0, pt.b, gy, gp}, t * gp, unit.area());
        }
        csv << io::row({x.x(), x.y(), a0(0, 0), pt.b(0, 0), gy.x(), gy.y(), gp.x(), gp.y(), ball, ell, general}) << '\n';
    }
    ctx.out << "wrote " << ctx.cfg.tderiv.points.size() << " point(s) to tderiv.csv\n";
    return ok;
}

int cmd_oracle(Context& ctx, std::optional<double> assert_tol) {
    const ProblemSpec spec = build_problem(ctx.cfg);
    warn_conditioning(ctx, spec.coeff);
    const auto& pt = ctx.cfg.perturbation;
    const PerturbationSpec pert{perturbation_shape(ctx.cfg), pt.b};
    const QuotientStudy study = quotient_sweep(spec, pert, pt.radii, pt.mode);
    const FemSolution sol = solve(spec);
    const double reference = closed_form_reference(spec, sol, pert).delta_j;
    const double gap = std::abs(study.extrapolated - reference) / std::abs(reference);

    auto csv = io::open_out(ctx.dir / "oracle.csv");
    csv << "r,J_perturbed,quotient\n";
    for (std::size_t k = 0; k < study.radii.size(); ++k)
        csv << io::row({study.radii[k], study.costs[k], study.quotients[k]}) << '\n';
    write_footer(csv, "extrapolated", study.extrapolated);
    write_footer(csv, "fit_residual", study.fit_residual);
    write_footer(csv, "closed_form_reference", reference);
    write_footer(csv, "relative_gap", gap);
    if (study.poor_fit()) ctx.err << "warning: fit residual exceeds 10% of the extrapolated limit\n";
    ctx.out << "extrapolated = " << fmt(study.extrapolated) << "\nreference = " << fmt(reference)
            << "\nrelative_gap = " << fmt(gap) << '\n';
    if (assert_tol && !(gap <= *assert_tol)) {
        ctx.err << "relative gap " << fmt(gap) << " exceeds tolerance " << fmt(*assert_tol) << '\n';
        return tolerance_exceeded;
    }
    return ok;
}

void write_matrix(const fs::path& path, const Mat2& m) {
    auto out = io::open_out(path);
    out << "c0,c1\n" << io::row({m(0, 0), m(0, 1)}) << '\n' << io::row({m(1, 0), m(1, 1)}) << '\n';
}

int cmd_exterior(Context& ctx) {
    const auto& ex = ctx.cfg.exterior;
    ExteriorConfig ec;
    ec.shape = ex.lambda == 1.0 ? InclusionShape::ball({0.0, 0.0}, 1.0)
                                : InclusionShape::ellipse({0.0, 0.0}, 1.0, ex.lambda, ex.theta);
    ec.a0 = ex.a0;
    ec.b = ex.b;
    ec.truncation_radius = ex.truncation_radius;
    ec.boundary_segments = ex.boundary_segments;
    ec.growth = ex.growth;
    ec.params = {ctx.cfg.problem.alpha};
    const ExteriorProblem problem(ec);

    std::array<ExteriorSolution, 4> sols;
    parallel_for(4, [&](int k) {
        const Vec2 g = Vec2::Unit(k % 2);
        sols[k] = k < 2 ? problem.solve_K(g) : problem.solve_Q(g);
    });
    for (int kind = 0; kind < 2; ++kind) {
        auto csv = io::open_out(ctx.dir / (kind == 0 ? "moments_K.csv" : "moments_Q.csv"));
        csv << "gx,gy,mx,my\n";
        for (int j = 0; j < 2; ++j) {
            const auto& s = sols[2 * kind + j];
            csv << io::row({s.forcing.x(), s.forcing.y(), s.moment.x(), s.moment.y()}) << '\n';
        }
    }
    Mat2 t;
    t.col(0) = sols[2].moment;
    t.col(1) = sols[3].moment;
    const Mat2 r = -t.transpose() * (ec.b - ec.a0);
    write_matrix(ctx.dir / "R.csv", r);
    const bool iso = ec.a0.isDiagonal(0.0) && ec.a0(0, 0) == ec.a0(1, 1) && ec.b.isDiagonal(0.0) && ec.b(0, 0) == ec.b(1, 1);
    if (iso) {
        const Mat2 m = (ec.b(0, 0) / ec.a0(0, 0)) * (ec.shape.area() * Mat2::Identity() + t);
        write_matrix(ctx.dir / "M.csv", m);
    }
    double duality = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            duality = std::max(duality, kq_duality_residual(sols[i], sols[2 + j], ec.a0, ec.b, Vec2::Unit(i), Vec2::Unit(j)));
    {
        auto s = io::open_out(ctx.dir / "exterior_summary.csv");
        s << "key,value\n";
        s << "vertices," << problem.mesh().num_vertices() << '\n';
        s << "elements," << problem.mesh().num_elements() << '\n';
        s << "inclusion_area," << fmt(problem.exterior_mesh().inclusion_area) << '\n';
        s << "kq_duality_residual," << fmt(duality) << '\n';
    }
    if (ctx.cfg.output.vtk) {
        std::vector<double> inside(problem.exterior_mesh().inside.begin(), problem.exterior_mesh().inside.end());
        io::write_vtk(ctx.dir / "exterior.vtk", problem.mesh(), {{"inside", inside}},
                      {{"K_e1", sols[0].field}, {"K_e2", sols[1].field}, {"Q_e1", sols[2].field}, {"Q_e2", sols[3].field}});
    }
    ctx.out << "R = [" << fmt(r(0, 0)) << ", " << fmt(r(0, 1)) << "; " << fmt(r(1, 0)) << ", " << fmt(r(1, 1)) << "]\n";
    return ok;
}

int cmd_range(Context& ctx) {
    const auto& po = ctx.cfg.point;
    const auto& rg = ctx.cfg.range;
    const ScalarPointData d{po.a0, po.b, po.gy, po.gp};
    d.validate();
    const EllipseRange range = delta_j_ellipse_range(d);
    auto csv = io::open_out(ctx.dir / "range.csv");
    csv << "lambda,theta,delta_j\n";
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < rg.lambda_count; ++i) {
        const double lambda = rg.lambda_count == 1
                                  ? rg.lambda_min
                                  : rg.lambda_min * std::pow(rg.lambda_max / rg.lambda_min, i / double(rg.lambda_count - 1));
        for (int j = 0; j < rg.theta_count; ++j) {
            const double theta = pi * j / rg.theta_count;
            const double v = delta_j_ellipse(d, lambda, theta);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            csv << io::row({lambda, theta, v}) << '\n';
        }
    }
    write_footer(csv, "interval_lo", range.closure.lo);
    write_footer(csv, "interval_hi", range.closure.hi);
    write_footer(csv, "sampled_min", lo);
    write_footer(csv, "sampled_max", hi);
    ctx.out << "interval = [" << fmt(range.closure.lo) << ", " << fmt(range.closure.hi) << "]\n";
    return ok;
}

int cmd_pmp(Context& ctx) {
    const ProblemSpec spec = build_problem(ctx.cfg);
    warn_conditioning(ctx, spec.coeff);
    const FemSolution sol = solve(spec);
    const auto& pm = ctx.cfg.pmp;
    const CostModel g = pm.cost.build(pm.alpha, pm.beta);
    const std::vector<double> grid = pm.b_grid.empty() ? default_b_grid(pm.alpha, pm.beta) : pm.b_grid;
    const PMPReport report = pmp_field_report(spec, sol, grid, g);

    auto csv = io::open_out(ctx.dir / "pmp.csv");
    csv << "element_id,x,y,s,n,min_res_scalar,argmin_b_scalar,min_res_scalar2d,argmin_b_scalar2d,frechet_res,class\n";
    for (const auto& r : report.records)
        csv << r.element << ','
            << io::row({r.x0.x(), r.x0.y(), r.s, r.n, r.min_scalar, r.argmin_scalar, r.min_scalar2d, r.argmin_scalar2d,
                        r.frechet})
            << ',' << r.classification << '\n';

    nlohmann::ordered_json summary;
    summary["elements"] = report.records.size();
    summary["violations"] = {{"scalar", report.scalar_violations},
                             {"scalar2d", report.scalar2d_violations},
                             {"frechet", report.frechet_violations}};
    std::map<std::string, int> classes;
    for (const auto& r : report.records) ++classes[r.classification];
    summary["classes"] = classes;
    nlohmann::ordered_json worst = nlohmann::ordered_json::array();
    for (int e : report.worst_offenders(static_cast<std::size_t>(pm.worst))) {
        const auto& r = report.records[e];
        worst.push_back({{"element_id", e},
                         {"x", r.x0.x()},
                         {"y", r.x0.y()},
                         {"s", r.s},
                         {"n", r.n},
                         {"min_res_scalar2d", r.min_scalar2d},
                         {"argmin_b_scalar2d", r.argmin_scalar2d},
                         {"class", r.classification}});
    }
    summary["worst_offenders"] = worst;
    io::open_out(ctx.dir / "pmp_summary.json") << summary.dump(2) << '\n';
    ctx.out << "violations: scalar " << report.scalar_violations << ", scalar2d " << report.scalar2d_violations
            << ", frechet " << report.frechet_violations << '\n';
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Topological derivatives for coefficient control problems"};
    app.require_subcommand(1);
    std::string config_path, output_dir;
    std::vector<std::string> overrides;
    std::optional<double> assert_tol;
    const std::vector<std::string> names{"solve", "tderiv", "oracle", "exterior", "range", "pmp"};
    const std::map<std::string, std::string> help{
        {"solve", "solve state and adjoint; manufactured convergence table for sin-product sources"},
        {"tderiv", "closed-form topological derivatives at requested points"},
        {"oracle", "difference-quotient study against the closed form"},
        {"exterior", "exterior corrector moments, sensitivity and polarization matrices"},
        {"range", "ellipse (lambda, theta) sweep with the analytic interval"},
        {"pmp", "field-wide optimality-condition audit"}};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("-c,--config", config_path, "configuration file (flat key = value or JSON)");
        sub->add_option("-o,--output", output_dir, "output directory (overrides output.dir)");
        sub->add_option("-s,--set", overrides, "override as section.key=value");
        if (name == "oracle")
            sub->add_option("--assert-tolerance", assert_tol, "exit 4 when the relative gap exceeds this value");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        FlatConfig raw;
        fs::path base_dir = fs::current_path();
        if (!config_path.empty()) {
            raw = load_config(config_path);
            base_dir = fs::absolute(config_path).parent_path();
        }
        std::vector<std::string> issues;
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos || eq == 0) {
                issues.push_back("--set " + o + ": expected section.key=value");
                continue;
            }
            raw[o.substr(0, eq)] = o.substr(eq + 1);
        }
        if (!output_dir.empty()) raw["output.dir"] = output_dir;
        if (!issues.empty()) throw ConfigError(std::move(issues));

        Context ctx{resolve(raw, base_dir, subcommand), {}, out, err};
        ctx.dir = ctx.cfg.output.dir;
        fs::create_directories(ctx.dir);
        io::open_out(ctx.dir / "config.resolved.txt") << to_flat_text(echo(ctx.cfg));

        if (subcommand == "solve") return cmd_solve(ctx);
        if (subcommand == "tderiv") return cmd_tderiv(ctx);
        if (subcommand == "oracle") return cmd_oracle(ctx, assert_tol);
        if (subcommand == "exterior") return cmd_exterior(ctx);
        if (subcommand == "range") return cmd_range(ctx);
        return cmd_pmp(ctx);
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return solver_failure;
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return config_error;
    } catch (const ResolutionError& e) {
        err << "resolution: " << e.what() << " (" << e.required_refinements() << " more refinement(s))\n";
        return config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
}

}  // namespace topoderiv::cli
