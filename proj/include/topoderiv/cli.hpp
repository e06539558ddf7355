#pragma once

#include "topoderiv/fem.hpp"
#include "topoderiv/mesh.hpp"
#include "topoderiv/pmp.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace topoderiv::cli {

/// Flat key-path configuration: "section.key" → raw value text.
using FlatConfig = std::map<std::string, std::string>;

/// Configuration error carrying every violated key path.
class ConfigError : public InputError {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// "section.key = value" lines; '#' starts a comment.
FlatConfig parse_flat(std::string_view text);
/// Nested JSON objects flattened with '.'; arrays joined with ',' (nested with ';').
FlatConfig parse_json(std::string_view text);
/// Chooses JSON for a .json extension or a leading '{'.
FlatConfig load_config(const std::filesystem::path& path);
std::string to_flat_text(const FlatConfig& cfg);

/// Scalar function of position: const:c, affine:c0,cx,cy, sin-product:k.
struct FieldSpec {
    enum class Kind { constant, affine, sin_product };
    Kind kind = Kind::constant;
    std::vector<double> params{0.0};

    static FieldSpec parse(std::string_view text);
    std::string text() const;
    /// sin-product evaluates sin(kπx̂)sin(kπŷ) in domain-normalized coordinates.
    double operator()(const Vec2& x, const Rect& domain) const;
};

/// const:c, matrix:a11,a12,a21,a22, disc:cx,cy,r,inside,outside, file:path.
struct CoefficientSpec {
    enum class Kind { constant, matrix, disc, file };
    Kind kind = Kind::constant;
    std::vector<double> params{1.0};
    std::string path;

    static CoefficientSpec parse(std::string_view text);
    std::string text() const;
};

/// linear:ℓ or tabulated:b0:g0,b1:g1,...
struct CostSpec {
    CostModel::Kind kind = CostModel::Kind::linear;
    double slope = 0.0;
    std::vector<std::pair<double, double>> table;

    static CostSpec parse(std::string_view text);
    std::string text() const;
    CostModel build(double alpha, double beta) const;
};

struct RunConfig {
    struct Problem {
        Rect domain{};
        int n = 256;
        int refinements = 0;
        FieldSpec f{FieldSpec::Kind::constant, {1.0}};
        FieldSpec y_d{FieldSpec::Kind::constant, {0.0}};
        CoefficientSpec coefficient{};
        double alpha = 1.0;
    } problem;
    struct Perturbation {
        Vec2 center{0.3, 0.4};
        Mat2 b = 2.0 * Mat2::Identity();
        double lambda = 1.0;
        double theta = 0.0;
        std::optional<Mat2> shape_matrix;
        std::vector<double> radii{0.12, 0.09, 0.0675, 0.0506};
        TagMode mode = TagMode::area_fraction;
    } perturbation;
    struct Exterior {
        double truncation_radius = 20.0;
        int boundary_segments = 256;
        double growth = 1.2;
        Mat2 a0 = Mat2::Identity();
        Mat2 b = 2.0 * Mat2::Identity();
        double lambda = 1.0;
        double theta = 0.0;
    } exterior;
    struct Pmp {
        double alpha = 1.0;
        double beta = 2.0;
        CostSpec cost{};
        std::vector<double> b_grid;  ///< empty → default grid
        int worst = 10;
    } pmp;
    struct Point {
        double a0 = 1.0;
        double b = 2.0;
        Vec2 gy{1.0, 0.0};
        Vec2 gp{1.0, 0.0};
    } point;
    struct Tderiv {
        std::vector<Vec2> points{Vec2(0.3, 0.4)};
        bool general = true;
    } tderiv;
    struct Range {
        double lambda_min = 1e-3;
        double lambda_max = 1e3;
        int lambda_count = 64;
        int theta_count = 256;
    } range;
    struct Output {
        std::filesystem::path dir = "out";
        bool vtk = true;
    } output;

    std::filesystem::path base_dir;  ///< directory that relative file paths resolve against
};

/// Validates every key; throws ConfigError listing all problems. The radius
/// ladder rules are enforced for the oracle subcommand (or when none is given).
RunConfig resolve(const FlatConfig& raw, const std::filesystem::path& base_dir = {}, std::string_view subcommand = {});
/// Fully resolved configuration with defaults filled.
FlatConfig echo(const RunConfig& cfg);

/// Problem assembled from the problem block.
ProblemSpec build_problem(const RunConfig& cfg);
InclusionShape perturbation_shape(const RunConfig& cfg, double radius = 1.0);

enum ExitCode { ok = 0, config_error = 2, solver_failure = 3, tolerance_exceeded = 4 };

/// Entry point: topoderiv <solve|tderiv|oracle|exterior|range|pmp> --config FILE [options].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topoderiv::cli
