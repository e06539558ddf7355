#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "topoderiv/cli.hpp"
#include "topoderiv/io.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace topoderiv;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("topoderiv_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// footer lines "# key,value"
std::map<std::string, double> footer(const fs::path& p) {
    std::map<std::string, double> out;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("# ", 0) == 0) {
            const auto comma = line.find(',');
            out[line.substr(2, comma - 2)] = std::stod(line.substr(comma + 1));
        }
    return out;
}

}  // namespace

TEST_CASE("io round trips") {
    const fs::path dir = scratch_dir("io");
    const Mesh m = build_rect_mesh(Rect{{0.0, 0.0}, {2.0, 1.0}}, 5);
    io::write_mesh_csv(dir, m);
    const Mesh back = io::read_mesh_csv(dir);
    CHECK(back.vertices() == m.vertices());
    CHECK(back.elements() == m.elements());

    Nodal field = interpolate(m, [](const Vec2& x) { return std::sin(3.0 * x.x()) / 7.0 + x.y(); });
    io::write_nodal_csv(dir / "f.csv", field, "f");
    CHECK(io::read_nodal_csv(dir / "f.csv", m.num_vertices()) == field);
    CHECK_THROWS_AS(io::read_nodal_csv(dir / "f.csv", m.num_vertices() + 1), InputError);

    std::mt19937_64 rng(3);
    std::vector<Mat2> values;
    for (int e = 0; e < m.num_elements(); ++e) values.push_back(testing::random_admissible(rng, 1.0, false));
    io::write_coefficient_csv(dir / "a.csv", values);
    CHECK(io::read_coefficient_csv(dir / "a.csv", m.num_elements()) == values);
    std::vector<double> scalars(m.num_elements(), 1.25);
    io::write_element_csv(dir / "s.csv", scalars);
    for (const Mat2& a : io::read_coefficient_csv(dir / "s.csv", m.num_elements())) CHECK(a == 1.25 * Mat2::Identity());

    CHECK(io::fmt(0.1) == "0.10000000000000001");
    const std::string text = slurp(dir / "f.csv");
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.rfind("node_id,f\n", 0) == 0);

    io::write_vtk(dir / "m.vtk", m, {{"tag", std::vector<double>(m.num_elements(), 1.0)}}, {{"f", field}});
    const std::string vtk = slurp(dir / "m.vtk");
    CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(vtk.find("CELLS " + std::to_string(m.num_elements()) + " " + std::to_string(4 * m.num_elements())) != std::string::npos);
    CHECK(vtk.find("CELL_DATA " + std::to_string(m.num_elements())) != std::string::npos);
    CHECK(vtk.find("POINT_DATA " + std::to_string(m.num_vertices())) != std::string::npos);
    CHECK_THROWS_AS(io::write_vtk(dir / "bad.vtk", m, {{"tag", {1.0}}}), InputError);

    std::ofstream(dir / "broken.csv") << "id,x,y\n0,1.0,abc\n";
    CHECK_THROWS_AS(io::read_csv(dir / "broken.csv"), InputError);
}

TEST_CASE("config parsing") {
    const cli::FlatConfig flat = cli::parse_flat("# comment\nproblem.n = 32\n\nperturbation.center = 0.4, 0.5  # trailing\n");
    CHECK(flat.at("problem.n") == "32");
    CHECK(flat.at("perturbation.center") == "0.4, 0.5");
    CHECK_THROWS_AS(cli::parse_flat("problem.n 32\n"), cli::ConfigError);

    const cli::FlatConfig js = cli::parse_json(R"({"problem": {"n": 32, "f": "const:2"}, "perturbation": {"center": [0.4, 0.5]}})");
    CHECK(js.at("problem.n") == "32");
    CHECK(js.at("problem.f") == "const:2");
    const cli::RunConfig a = cli::resolve(flat, {}, "solve");
    const cli::RunConfig b = cli::resolve(js, {}, "solve");
    CHECK(a.perturbation.center == Vec2(0.4, 0.5));
    CHECK(b.perturbation.center == Vec2(0.4, 0.5));
    CHECK(b.problem.f(Vec2(0.2, 0.9), b.problem.domain) == 2.0);

    // echo is a fixed point of resolve
    const cli::FlatConfig echoed = cli::echo(a);
    CHECK(cli::echo(cli::resolve(echoed, {}, "solve")) == echoed);
    CHECK(cli::parse_flat(cli::to_flat_text(echoed)) == echoed);
}

TEST_CASE("config validation lists every problem") {
    try {
        cli::resolve({{"problem.n", "0"}, {"problem.bogus", "1"}, {"perturbation.b", "0.5"}, {"pmp.beta", "x"}}, {}, "solve");
        FAIL("expected ConfigError");
    } catch (const cli::ConfigError& e) {
        const auto& issues = e.issues();
        auto mentions = [&](const std::string& key) {
            return std::any_of(issues.begin(), issues.end(), [&](const std::string& s) { return s.rfind(key, 0) == 0; });
        };
        CHECK(mentions("problem.n"));
        CHECK(mentions("problem.bogus"));
        CHECK(mentions("perturbation.b"));
        CHECK(mentions("pmp.beta"));
    }
    // ladder rules apply to the oracle
    CHECK_THROWS_AS(cli::resolve({{"problem.n", "64"}}, {}, "oracle"), cli::ConfigError);
    CHECK_NOTHROW(cli::resolve({{"problem.n", "64"}}, {}, "solve"));
    CHECK_THROWS_AS(cli::resolve({{"perturbation.radii", "0.12,0.1,0.08,0.06"}}, {}, "oracle"), cli::ConfigError);
}

TEST_CASE("field specs") {
    const Rect unit{};
    CHECK(cli::FieldSpec::parse("affine:1,2,3")(Vec2(0.5, 2.0), unit) == 1.0 + 1.0 + 6.0);
    CHECK(cli::FieldSpec::parse("sin-product:2")(Vec2(0.25, 0.25), unit) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cli::FieldSpec::parse("sin-product:1.5"), InputError);
    CHECK_THROWS_AS(cli::FieldSpec::parse("cubic:1"), InputError);
    CHECK(cli::CoefficientSpec::parse("matrix:2,0.5,-0.5,2").text() == "matrix:2,0.5,-0.5,2");
    const cli::CostSpec tab = cli::CostSpec::parse("tabulated:1:0,2:1,3:4");
    CHECK(tab.build(1.0, 3.0)(2.5) == doctest::Approx(2.5));
}

TEST_CASE("solve subcommand") {
    const fs::path dir = scratch_dir("solve");
    const Result r = run({"solve", "--set", "problem.n=16", "--set", "problem.f=sin-product:1", "-o", dir.string()});
    REQUIRE(r.code == cli::ok);
    for (const char* f : {"vertices.csv", "elements.csv", "coefficient.csv", "state.csv", "adjoint.csv", "summary.csv",
                          "solution.vtk", "convergence.csv", "config.resolved.txt"})
        CHECK(fs::exists(dir / f));
    const io::Table conv = io::read_csv(dir / "convergence.csv");
    REQUIRE(conv.rows.size() == 4);
    for (std::size_t k = 1; k < conv.rows.size(); ++k) {
        CHECK(conv.rows[k][3] >= 3.6);
        CHECK(conv.rows[k][3] <= 4.4);
    }
    const io::Table state = io::read_csv(dir / "state.csv");
    CHECK(static_cast<int>(state.rows.size()) == io::read_mesh_csv(dir).num_vertices());

    // determinism
    const fs::path again = scratch_dir("solve_again");
    REQUIRE(run({"solve", "--set", "problem.n=16", "--set", "problem.f=sin-product:1", "-o", again.string()}).code == cli::ok);
    for (const char* f : {"state.csv", "adjoint.csv", "summary.csv", "convergence.csv", "solution.vtk"})
        CHECK(slurp(dir / f) == slurp(again / f));
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch_dir("codes");
    CHECK(run({"solve", "--set", "problem.n=-1", "-o", dir.string()}).code == cli::config_error);
    CHECK(run({"solve", "--config", (dir / "missing.cfg").string()}).code == cli::config_error);
    CHECK(run({"bogus"}).code == cli::config_error);
    CHECK(run({"solve", "--set", "no-equals-sign"}).code == cli::config_error);

    std::ofstream(dir / "ill.cfg") << "problem.n = 8\nproblem.coefficient = const:1e9\n";
    const Result warn = run({"solve", "--config", (dir / "ill.cfg").string(), "-o", (dir / "ill").string()});
    CHECK(warn.code == cli::ok);
    CHECK(warn.err.find("condition number") == std::string::npos);
    std::ofstream(dir / "ill2.cfg") << "problem.n = 8\nproblem.coefficient = disc:0.5,0.5,0.3,1,1e9\n";
    const Result warn2 = run({"solve", "--config", (dir / "ill2.cfg").string(), "-o", (dir / "ill2").string()});
    CHECK(warn2.err.find("condition number") != std::string::npos);
}

TEST_CASE("oracle subcommand") {
    const fs::path dir = scratch_dir("oracle");
    std::ofstream(dir / "oracle.cfg") << "problem.n = 128\nperturbation.center = 0.5,0.3\n"
                                         "perturbation.radii = 0.21,0.1575,0.118125,0.0885\n";
    const Result r = run({"oracle", "--config", (dir / "oracle.cfg").string(), "-o", (dir / "out").string(),
                          "--assert-tolerance", "0"});
    CHECK(r.code == cli::tolerance_exceeded);
    const auto f = footer(dir / "out" / "oracle.csv");
    for (const char* key : {"extrapolated", "fit_residual", "closed_form_reference", "relative_gap"}) CHECK(f.count(key) == 1);
    CHECK(f.at("relative_gap") == doctest::Approx(std::abs(f.at("extrapolated") - f.at("closed_form_reference")) /
                                                  std::abs(f.at("closed_form_reference"))));
    const io::Table t = io::read_csv(dir / "out" / "oracle.csv");
    CHECK(t.header == std::vector<std::string>{"r", "J_perturbed", "quotient"});
    CHECK(t.rows.size() == 4);
}

TEST_CASE("range subcommand") {
    const fs::path dir = scratch_dir("range");
    REQUIRE(run({"range", "-o", dir.string(), "--set", "point.gy=1,0.5", "--set", "point.gp=0.2,1"}).code == cli::ok);
    const io::Table t = io::read_csv(dir / "range.csv");
    CHECK(t.rows.size() == 64 * 256);
    const auto f = footer(dir / "range.csv");
    for (const auto& row : t.rows) {
        CHECK(row[2] >= f.at("interval_lo") - 1e-12);
        CHECK(row[2] <= f.at("interval_hi") + 1e-12);
    }
}

TEST_CASE("tderiv subcommand") {
    const fs::path dir = scratch_dir("tderiv");
    REQUIRE(run({"tderiv", "-o", dir.string(), "--set", "problem.n=32", "--set", "tderiv.points=0.3,0.4;0.6,0.7"}).code ==
            cli::ok);
    const io::Table t = io::read_csv(dir / "tderiv.csv");
    REQUIRE(t.rows.size() == 2);
    for (const auto& row : t.rows) {
        CHECK(row[8] == doctest::Approx(row[9]).epsilon(1e-13));  // λ = 1 ellipse is the ball
        CHECK(std::abs(row[10] - row[8]) <= 0.05 * std::abs(row[8]));
    }
}

TEST_CASE("exterior subcommand") {
    const fs::path dir = scratch_dir("exterior");
    REQUIRE(run({"exterior", "-o", dir.string(), "--set", "output.vtk=false"}).code == cli::ok);
    const io::Table r = io::read_csv(dir / "R.csv");
    REQUIRE(r.rows.size() == 2);
    CHECK(std::abs(r.rows[0][0] - pi / 3.0) <= 0.05 * pi / 3.0);
    const io::Table m = io::read_csv(dir / "M.csv");
    CHECK(std::abs(m.rows[1][1] - pi * 4.0 / 3.0) <= 0.05 * pi * 4.0 / 3.0);
    CHECK(io::read_csv(dir / "moments_K.csv").header == std::vector<std::string>{"gx", "gy", "mx", "my"});
}

TEST_CASE("pmp subcommand matches the classifier") {
    const fs::path dir = scratch_dir("pmp");
    const double alpha = 1.0, beta = 2.0, ell = 2e-4;
    REQUIRE(run({"pmp", "-o", dir.string(), "--set", "problem.n=32", "--set", "problem.coefficient=disc:0.5,0.5,0.3,1,2",
                 "--set", "pmp.cost=linear:2e-4"})
                .code == cli::ok);
    std::ifstream in(dir / "pmp.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "element_id,x,y,s,n,min_res_scalar,argmin_b_scalar,min_res_scalar2d,argmin_b_scalar2d,frechet_res,class");
    const ProblemSpec spec = [] {
        cli::RunConfig c = cli::resolve({{"problem.n", "32"}, {"problem.coefficient", "disc:0.5,0.5,0.3,1,2"}}, {}, "pmp");
        return cli::build_problem(c);
    }();
    int rows = 0, violated = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        REQUIRE(f.size() == 11);
        const int e = std::stoi(f[0]);
        const double s = std::stod(f[3]), n = std::stod(f[4]);
        CHECK(f[10] == to_string(linear_g_classify(s, n, ell, alpha, beta, spec.coeff.scalar(e)).tag));
        violated += f[10] == "violated";
        ++rows;
    }
    CHECK(rows == spec.mesh->num_elements());
    CHECK(violated > 0);
    const std::string summary = slurp(dir / "pmp_summary.json");
    CHECK(summary.find("\"worst_offenders\"") != std::string::npos);
    CHECK(summary.find("\"scalar2d\"") != std::string::npos);
}
