#include "topoderiv/cli.hpp"

#include "topoderiv/io.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace topoderiv::cli {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Shortest round-trip representation.
std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("'" + std::string(s) + "' is not a number");
    if (!std::isfinite(v)) throw InputError("'" + std::string(s) + "' is not finite");
    return v;
}

int parse_int(std::string_view s) {
    const double v = parse_number(s);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw InputError("'" + std::string(trim(s)) + "' is not an integer");
    return static_cast<int>(v);
}

bool parse_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw InputError("'" + std::string(s) + "' is not a boolean");
}

std::vector<double> parse_list(std::string_view s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (auto part : split(s, ',')) out.push_back(parse_number(part));
    return out;
}

std::vector<double> parse_exact(std::string_view s, std::size_t count, const char* what) {
    auto v = parse_list(s);
    if (v.size() != count) throw InputError(std::string("expected ") + what);
    return v;
}

Vec2 parse_vec2(std::string_view s) {
    const auto v = parse_exact(s, 2, "two comma-separated numbers");
    return {v[0], v[1]};
}

Mat2 parse_mat2(std::string_view s) {
    s = trim(s);
    if (s.starts_with("matrix:")) s.remove_prefix(7);
    if (s.starts_with("const:")) s.remove_prefix(6);
    const auto v = parse_list(s);
    if (v.size() == 1) return v[0] * Mat2::Identity();
    if (v.size() != 4) throw InputError("expected a scalar or four numbers a11,a12,a21,a22");
    Mat2 m;
    m << v[0], v[1], v[2], v[3];
    return m;
}

std::string mat_text(const Mat2& m) {
    if (m(0, 1) == 0.0 && m(1, 0) == 0.0 && m(0, 0) == m(1, 1)) return num(m(0, 0));
    return num(m(0, 0)) + "," + num(m(0, 1)) + "," + num(m(1, 0)) + "," + num(m(1, 1));
}

std::string vec_text(const Vec2& v) { return num(v.x()) + "," + num(v.y()); }

std::string list_text(const std::vector<double>& v) {
    std::vector<std::string> parts;
    for (double x : v) parts.push_back(num(x));
    return join(parts, ",");
}

std::pair<std::string_view, std::string_view> kind_and_args(std::string_view s) {
    s = trim(s);
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) return {{}, s};
    return {trim(s.substr(0, colon)), trim(s.substr(colon + 1))};
}

void flatten(const nlohmann::json& j, const std::string& prefix, FlatConfig& out, std::vector<std::string>& issues) {
    auto scalar_text = [](const nlohmann::json& v) -> std::optional<std::string> {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        return std::nullopt;
    };
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out, issues);
        return;
    }
    if (j.is_array()) {
        std::vector<std::string> parts;
        for (const auto& el : j) {
            if (el.is_array()) {
                std::vector<std::string> inner;
                for (const auto& x : el) {
                    auto t = scalar_text(x);
                    if (!t) issues.push_back(prefix + ": unsupported nested value");
                    else inner.push_back(*t);
                }
                parts.push_back(join(inner, ","));
            } else {
                auto t = scalar_text(el);
                if (!t) issues.push_back(prefix + ": unsupported array element");
                else parts.push_back(*t);
            }
        }
        const bool nested = !j.empty() && j.front().is_array();
        out[prefix] = join(parts, nested ? ";" : ",");
        return;
    }
    auto t = scalar_text(j);
    if (!t) {
        issues.push_back(prefix + ": null is not a valid value");
        return;
    }
    out[prefix] = *t;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : InputError("configuration invalid:\n  " + join(issues, "\n  ")), issues_(std::move(issues)) {}

FlatConfig parse_flat(std::string_view text) {
    FlatConfig out;
    std::vector<std::string> issues;
    std::size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            issues.push_back("line " + std::to_string(lineno) + ": expected 'section.key = value'");
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            issues.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (!out.emplace(key, value).second) issues.push_back(key + ": duplicate key (line " + std::to_string(lineno) + ")");
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return out;
}

FlatConfig parse_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("json: ") + e.what()});
    }
    if (!j.is_object()) throw ConfigError({"json: top level must be an object"});
    FlatConfig out;
    std::vector<std::string> issues;
    flatten(j, "", out, issues);
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return out;
}

FlatConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"cannot read config file " + path.string()});
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) return parse_json(text);
    return parse_flat(text);
}

std::string to_flat_text(const FlatConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg) out += k + " = " + v + "\n";
    return out;
}

FieldSpec FieldSpec::parse(std::string_view text) {
    auto [kind, args] = kind_and_args(text);
    FieldSpec f;
    if (kind.empty() || kind == "const") {
        f.kind = Kind::constant;
        f.params = parse_exact(args, 1, "one number");
    } else if (kind == "affine") {
        f.kind = Kind::affine;
        f.params = parse_exact(args, 3, "affine:c0,cx,cy");
    } else if (kind == "sin-product") {
        f.kind = Kind::sin_product;
        f.params = parse_exact(args, 1, "sin-product:k");
        if (f.params[0] < 1.0 || f.params[0] != std::floor(f.params[0]))
            throw InputError("sin-product wave number must be a positive integer");
    } else {
        throw InputError("unknown function kind '" + std::string(kind) + "' (const, affine, sin-product)");
    }
    return f;
}

std::string FieldSpec::text() const {
    switch (kind) {
        case Kind::constant: return "const:" + list_text(params);
        case Kind::affine: return "affine:" + list_text(params);
        case Kind::sin_product: return "sin-product:" + list_text(params);
    }
    return {};
}

double FieldSpec::operator()(const Vec2& x, const Rect& domain) const {
    switch (kind) {
        case Kind::constant: return params[0];
        case Kind::affine: return params[0] + params[1] * x.x() + params[2] * x.y();
        case Kind::sin_product: {
            const double k = params[0];
            const double u = (x.x() - domain.lo.x()) / (domain.hi.x() - domain.lo.x());
            const double v = (x.y() - domain.lo.y()) / (domain.hi.y() - domain.lo.y());
            return std::sin(k * pi * u) * std::sin(k * pi * v);
        }
    }
    return 0.0;
}

CoefficientSpec CoefficientSpec::parse(std::string_view text) {
    auto [kind, args] = kind_and_args(text);
    CoefficientSpec c;
    if (kind.empty() || kind == "const") {
        c.kind = Kind::constant;
        c.params = parse_exact(args, 1, "one number");
    } else if (kind == "matrix") {
        c.kind = Kind::matrix;
        c.params = parse_exact(args, 4, "matrix:a11,a12,a21,a22");
    } else if (kind == "disc") {
        c.kind = Kind::disc;
        c.params = parse_exact(args, 5, "disc:cx,cy,r,inside,outside");
        if (!(c.params[2] > 0.0)) throw InputError("disc radius must be positive");
    } else if (kind == "file") {
        c.kind = Kind::file;
        c.params.clear();
        c.path = std::string(args);
        if (c.path.empty()) throw InputError("file: needs a path");
    } else {
        throw InputError("unknown coefficient kind '" + std::string(kind) + "' (const, matrix, disc, file)");
    }
    return c;
}

std::string CoefficientSpec::text() const {
    switch (kind) {
        case Kind::constant: return "const:" + list_text(params);
        case Kind::matrix: return "matrix:" + list_text(params);
        case Kind::disc: return "disc:" + list_text(params);
        case Kind::file: return "file:" + path;
    }
    return {};
}

CostSpec CostSpec::parse(std::string_view text) {
    auto [kind, args] = kind_and_args(text);
    CostSpec c;
    if (kind == "linear") {
        c.kind = CostModel::Kind::linear;
        c.slope = parse_exact(args, 1, "linear:slope")[0];
    } else if (kind == "tabulated") {
        c.kind = CostModel::Kind::tabulated;
        for (auto pair : split(args, ',')) {
            const auto bg = split(pair, ':');
            if (bg.size() != 2) throw InputError("tabulated entries must be b:g");
            c.table.emplace_back(parse_number(bg[0]), parse_number(bg[1]));
        }
        if (c.table.size() < 2) throw InputError("tabulated cost needs at least two entries");
    } else {
        throw InputError("unknown cost kind '" + std::string(kind) + "' (linear, tabulated)");
    }
    return c;
}

std::string CostSpec::text() const {
    if (kind == CostModel::Kind::linear) return "linear:" + num(slope);
    std::vector<std::string> parts;
    for (const auto& [b, g] : table) parts.push_back(num(b) + ":" + num(g));
    return "tabulated:" + join(parts, ",");
}

CostModel CostSpec::build(double alpha, double beta) const {
    if (kind == CostModel::Kind::linear) return CostModel::linear(slope, alpha, beta);
    return CostModel::tabulated(table, alpha, beta);
}

namespace {

class Resolver {
public:
    explicit Resolver(const FlatConfig& raw) : raw_(raw) {}

    template <class T, class Parse>
    T get(const std::string& key, T fallback, Parse parse) {
        used_.insert(key);
        const auto it = raw_.find(key);
        if (it == raw_.end()) return fallback;
        try {
            return parse(it->second);
        } catch (const std::exception& e) {
            issue(key, e.what());
            return fallback;
        }
    }
    bool has(const std::string& key) const { return raw_.count(key) != 0; }
    void issue(const std::string& key, const std::string& what) { issues_.push_back(key + ": " + what); }
    void check(bool ok, const std::string& key, const std::string& what) {
        if (!ok) issue(key, what);
    }
    void unknown_keys() {
        for (const auto& [k, v] : raw_)
            if (!used_.count(k)) issue(k, "unknown configuration key");
    }
    std::vector<std::string>& issues() { return issues_; }

private:
    const FlatConfig& raw_;
    std::set<std::string> used_;
    std::vector<std::string> issues_;
};

double max_cell_diameter(const RunConfig& cfg) {
    const Rect& d = cfg.problem.domain;
    const double cells = cfg.problem.n * std::pow(2.0, cfg.problem.refinements);
    return std::hypot((d.hi.x() - d.lo.x()) / cells, (d.hi.y() - d.lo.y()) / cells);
}

bool admissible(const Mat2& m, double alpha) {
    return sym_min_eigenvalue(0.5 * (m + m.transpose())) >= alpha - 1e-12;
}

}  // namespace

RunConfig resolve(const FlatConfig& raw, const std::filesystem::path& base_dir, std::string_view subcommand) {
    Resolver r(raw);
    RunConfig c;
    c.base_dir = base_dir;

    auto& pb = c.problem;
    pb.domain = r.get("problem.domain", pb.domain, [](const std::string& s) {
        const auto v = parse_exact(s, 4, "four numbers x0,y0,x1,y1");
        if (!(v[2] > v[0]) || !(v[3] > v[1])) throw InputError("need x1 > x0 and y1 > y0");
        return Rect{{v[0], v[1]}, {v[2], v[3]}};
    });
    pb.n = r.get("problem.n", pb.n, parse_int);
    r.check(pb.n >= 1 && pb.n <= 4096, "problem.n", "must lie in [1, 4096]");
    pb.refinements = r.get("problem.refinements", pb.refinements, parse_int);
    r.check(pb.refinements >= 0 && pb.refinements <= 6, "problem.refinements", "must lie in [0, 6]");
    pb.alpha = r.get("problem.alpha", pb.alpha, parse_number);
    r.check(pb.alpha > 0.0, "problem.alpha", "must be positive");
    pb.f = r.get("problem.f", pb.f, [](const std::string& s) { return FieldSpec::parse(s); });
    pb.y_d = r.get("problem.y_d", pb.y_d, [](const std::string& s) { return FieldSpec::parse(s); });
    pb.coefficient = r.get("problem.coefficient", pb.coefficient, [](const std::string& s) { return CoefficientSpec::parse(s); });
    switch (pb.coefficient.kind) {
        case CoefficientSpec::Kind::constant:
            r.check(pb.coefficient.params[0] >= pb.alpha, "problem.coefficient", "value below problem.alpha");
            break;
        case CoefficientSpec::Kind::matrix: {
            const auto& v = pb.coefficient.params;
            r.check(admissible((Mat2() << v[0], v[1], v[2], v[3]).finished(), pb.alpha), "problem.coefficient",
                    "matrix is not admissible at level problem.alpha");
            break;
        }
        case CoefficientSpec::Kind::disc:
            r.check(pb.coefficient.params[3] >= pb.alpha && pb.coefficient.params[4] >= pb.alpha, "problem.coefficient",
                    "disc values below problem.alpha");
            break;
        case CoefficientSpec::Kind::file:
            r.check(std::filesystem::exists(base_dir / pb.coefficient.path), "problem.coefficient",
                    "file '" + pb.coefficient.path + "' not found");
            break;
    }
    if (pb.f.kind == FieldSpec::Kind::sin_product) {
        const auto& co = pb.coefficient;
        const bool constant_iso = co.kind == CoefficientSpec::Kind::constant ||
                                  (co.kind == CoefficientSpec::Kind::matrix && co.params[1] == 0.0 &&
                                   co.params[2] == 0.0 && co.params[0] == co.params[3]);
        r.check(constant_iso, "problem.f", "sin-product source requires a constant isotropic coefficient");
    }

    auto& pt = c.perturbation;
    pt.center = r.get("perturbation.center", pt.center, parse_vec2);
    pt.b = r.get("perturbation.b", pt.b, parse_mat2);
    r.check(admissible(pt.b, pb.alpha), "perturbation.b", "not admissible at level problem.alpha");
    pt.lambda = r.get("perturbation.lambda", pt.lambda, parse_number);
    r.check(pt.lambda > 0.0, "perturbation.lambda", "must be positive");
    pt.theta = r.get("perturbation.theta", pt.theta, parse_number);
    if (r.has("perturbation.shape_matrix")) {
        pt.shape_matrix = r.get("perturbation.shape_matrix", Mat2(Mat2::Identity()), [](const std::string& s) {
            const Mat2 h = parse_mat2(s);
            InclusionShape({0.0, 0.0}, 1.0, h);
            return h;
        });
    }
    pt.radii = r.get("perturbation.radii", pt.radii, parse_list);
    pt.mode = r.get("perturbation.mode", pt.mode, [](const std::string& s) {
        if (s == "area_fraction") return TagMode::area_fraction;
        if (s == "centroid") return TagMode::centroid;
        throw InputError("must be area_fraction or centroid");
    });
    if (subcommand.empty() || subcommand == "oracle") {
        bool ok = pt.radii.size() >= 4;
        r.check(ok, "perturbation.radii", "at least 4 radii are required");
        for (std::size_t k = 0; k < pt.radii.size(); ++k) {
            if (!(pt.radii[k] > 0.0)) {
                r.issue("perturbation.radii", "radii must be positive");
                break;
            }
            if (k > 0 && !(pt.radii[k] <= 0.75 * pt.radii[k - 1] + 1e-12)) {
                r.issue("perturbation.radii", "must be strictly decreasing with ratio <= 0.75");
                break;
            }
        }
        const double h = max_cell_diameter(c);
        for (double rad : pt.radii)
            if (rad > 0.0 && rad < 8.0 * h) {
                const int levels = static_cast<int>(std::ceil(std::log2(8.0 * h / rad)));
                r.issue("perturbation.radii", "radius " + num(rad) + " violates r/h >= 8 (h = " + num(h) + "); needs " +
                                                  std::to_string(levels) + " more refinement(s)");
            }
    }
    {
        const Rect& d = pb.domain;
        r.check(pt.center.x() > d.lo.x() && pt.center.x() < d.hi.x() && pt.center.y() > d.lo.y() &&
                    pt.center.y() < d.hi.y(),
                "perturbation.center", "must lie inside problem.domain");
    }

    auto& ex = c.exterior;
    ex.truncation_radius = r.get("exterior.truncation_radius", ex.truncation_radius, parse_number);
    ex.boundary_segments = r.get("exterior.boundary_segments", ex.boundary_segments, parse_int);
    r.check(ex.boundary_segments >= 256, "exterior.boundary_segments", "must be at least 256");
    ex.growth = r.get("exterior.growth", ex.growth, parse_number);
    r.check(ex.growth >= 1.0 && ex.growth <= 2.0, "exterior.growth", "must lie in [1, 2]");
    ex.a0 = r.get("exterior.a0", ex.a0, parse_mat2);
    r.check(admissible(ex.a0, pb.alpha), "exterior.a0", "not admissible at level problem.alpha");
    ex.b = r.get("exterior.b", ex.b, parse_mat2);
    r.check(admissible(ex.b, pb.alpha), "exterior.b", "not admissible at level problem.alpha");
    ex.lambda = r.get("exterior.lambda", ex.lambda, parse_number);
    r.check(ex.lambda > 0.0, "exterior.lambda", "must be positive");
    ex.theta = r.get("exterior.theta", ex.theta, parse_number);
    if (ex.lambda > 0.0) {
        const double circ = std::sqrt(std::max(ex.lambda, 1.0 / ex.lambda));
        r.check(ex.truncation_radius >= 10.0 && ex.truncation_radius >= 10.0 * circ, "exterior.truncation_radius",
                "must be at least 10 and 10x the inclusion circumradius");
    }

    auto& pm = c.pmp;
    pm.alpha = r.get("pmp.alpha", pb.alpha, parse_number);
    pm.beta = r.get("pmp.beta", pm.beta, parse_number);
    r.check(pm.alpha > 0.0, "pmp.alpha", "must be positive");
    r.check(pm.beta > pm.alpha, "pmp.beta", "must exceed pmp.alpha");
    pm.cost = r.get("pmp.cost", pm.cost, [](const std::string& s) { return CostSpec::parse(s); });
    if (pm.cost.kind == CostModel::Kind::tabulated) {
        try {
            pm.cost.build(pm.alpha, pm.beta);
        } catch (const std::exception& e) {
            r.issue("pmp.cost", e.what());
        }
    }
    pm.b_grid = r.get("pmp.b_grid", pm.b_grid, parse_list);
    for (double b : pm.b_grid)
        if (!(b >= pm.alpha - 1e-12) || !(b <= pm.beta + 1e-12)) {
            r.issue("pmp.b_grid", "values must lie in [pmp.alpha, pmp.beta]");
            break;
        }
    pm.worst = r.get("pmp.worst", pm.worst, parse_int);
    r.check(pm.worst >= 0, "pmp.worst", "must be non-negative");

    auto& po = c.point;
    po.a0 = r.get("point.a0", po.a0, parse_number);
    po.b = r.get("point.b", po.b, parse_number);
    r.check(po.a0 > 0.0, "point.a0", "must be positive");
    r.check(po.b > 0.0, "point.b", "must be positive");
    po.gy = r.get("point.gy", po.gy, parse_vec2);
    po.gp = r.get("point.gp", po.gp, parse_vec2);

    auto& td = c.tderiv;
    td.points = r.get("tderiv.points", td.points, [](const std::string& s) {
        std::vector<Vec2> pts;
        for (auto p : split(s, ';')) pts.push_back(parse_vec2(p));
        return pts;
    });
    for (const Vec2& p : td.points)
        if (!(p.x() >= pb.domain.lo.x() && p.x() <= pb.domain.hi.x() && p.y() >= pb.domain.lo.y() &&
              p.y() <= pb.domain.hi.y())) {
            r.issue("tderiv.points", "point " + vec_text(p) + " lies outside problem.domain");
        }
    td.general = r.get("tderiv.general", td.general, parse_bool);

    auto& rg = c.range;
    rg.lambda_min = r.get("range.lambda_min", rg.lambda_min, parse_number);
    rg.lambda_max = r.get("range.lambda_max", rg.lambda_max, parse_number);
    r.check(rg.lambda_min > 0.0 && rg.lambda_max >= rg.lambda_min, "range.lambda_min",
            "need 0 < range.lambda_min <= range.lambda_max");
    rg.lambda_count = r.get("range.lambda_count", rg.lambda_count, parse_int);
    r.check(rg.lambda_count >= 1, "range.lambda_count", "must be at least 1");
    rg.theta_count = r.get("range.theta_count", rg.theta_count, parse_int);
    r.check(rg.theta_count >= 1, "range.theta_count", "must be at least 1");

    c.output.dir = r.get("output.dir", c.output.dir, [](const std::string& s) {
        if (s.empty()) throw InputError("must not be empty");
        return std::filesystem::path(s);
    });
    c.output.vtk = r.get("output.vtk", c.output.vtk, parse_bool);

    r.unknown_keys();
    if (!r.issues().empty()) throw ConfigError(std::move(r.issues()));
    return c;
}

FlatConfig echo(const RunConfig& c) {
    FlatConfig out;
    const auto& pb = c.problem;
    out["problem.domain"] = list_text({pb.domain.lo.x(), pb.domain.lo.y(), pb.domain.hi.x(), pb.domain.hi.y()});
    out["problem.n"] = std::to_string(pb.n);
    out["problem.refinements"] = std::to_string(pb.refinements);
    out["problem.alpha"] = num(pb.alpha);
    out["problem.f"] = pb.f.text();
    out["problem.y_d"] = pb.y_d.text();
    out["problem.coefficient"] = pb.coefficient.text();
    const auto& pt = c.perturbation;
    out["perturbation.center"] = vec_text(pt.center);
    out["perturbation.b"] = mat_text(pt.b);
    out["perturbation.lambda"] = num(pt.lambda);
    out["perturbation.theta"] = num(pt.theta);
    if (pt.shape_matrix) out["perturbation.shape_matrix"] = mat_text(*pt.shape_matrix);
    out["perturbation.radii"] = list_text(pt.radii);
    out["perturbation.mode"] = pt.mode == TagMode::area_fraction ? "area_fraction" : "centroid";
    const auto& ex = c.exterior;
    out["exterior.truncation_radius"] = num(ex.truncation_radius);
    out["exterior.boundary_segments"] = std::to_string(ex.boundary_segments);
    out["exterior.growth"] = num(ex.growth);
    out["exterior.a0"] = mat_text(ex.a0);
    out["exterior.b"] = mat_text(ex.b);
    out["exterior.lambda"] = num(ex.lambda);
    out["exterior.theta"] = num(ex.theta);
    const auto& pm = c.pmp;
    out["pmp.alpha"] = num(pm.alpha);
    out["pmp.beta"] = num(pm.beta);
    out["pmp.cost"] = pm.cost.text();
    out["pmp.b_grid"] = list_text(pm.b_grid);
    out["pmp.worst"] = std::to_string(pm.worst);
    out["point.a0"] = num(c.point.a0);
    out["point.b"] = num(c.point.b);
    out["point.gy"] = vec_text(c.point.gy);
    out["point.gp"] = vec_text(c.point.gp);
    std::vector<std::string> pts;
    for (const Vec2& p : c.tderiv.points) pts.push_back(vec_text(p));
    out["tderiv.points"] = join(pts, ";");
    out["tderiv.general"] = c.tderiv.general ? "true" : "false";
    out["range.lambda_min"] = num(c.range.lambda_min);
    out["range.lambda_max"] = num(c.range.lambda_max);
    out["range.lambda_count"] = std::to_string(c.range.lambda_count);
    out["range.theta_count"] = std::to_string(c.range.theta_count);
    out["output.dir"] = c.output.dir.generic_string();
    out["output.vtk"] = c.output.vtk ? "true" : "false";
    return out;
}

ProblemSpec build_problem(const RunConfig& cfg) {
    const auto& pb = cfg.problem;
    Mesh base = build_rect_mesh(pb.domain, pb.n);
    for (int k = 0; k < pb.refinements; ++k) base = uniform_refine(base);
    auto mesh = std::make_shared<const Mesh>(std::move(base));
    const AdmissibilityParams params{pb.alpha};

    std::vector<Mat2> values(mesh->num_elements());
    const auto& co = pb.coefficient;
    switch (co.kind) {
        case CoefficientSpec::Kind::constant: std::fill(values.begin(), values.end(), co.params[0] * Mat2::Identity()); break;
        case CoefficientSpec::Kind::matrix: {
            Mat2 m;
            m << co.params[0], co.params[1], co.params[2], co.params[3];
            std::fill(values.begin(), values.end(), m);
            break;
        }
        case CoefficientSpec::Kind::disc: {
            const Vec2 center(co.params[0], co.params[1]);
            for (int e = 0; e < mesh->num_elements(); ++e)
                values[e] = ((mesh->element_centroid(e) - center).norm() <= co.params[2] ? co.params[3] : co.params[4]) *
                            Mat2::Identity();
            break;
        }
        case CoefficientSpec::Kind::file:
            values = io::read_coefficient_csv(cfg.base_dir / co.path, mesh->num_elements());
            break;
    }
    CoefficientField coeff(std::move(values), params);

    double scale = 1.0;
    if (pb.f.kind == FieldSpec::Kind::sin_product) {
        const double k = pb.f.params[0];
        const double lx = pb.domain.hi.x() - pb.domain.lo.x(), ly = pb.domain.hi.y() - pb.domain.lo.y();
        scale = coeff.scalar(0) * k * k * pi * pi * (1.0 / (lx * lx) + 1.0 / (ly * ly));
    }
    const Nodal f = interpolate(*mesh, [&](const Vec2& x) { return scale * pb.f(x, pb.domain); });
    const Nodal yd = interpolate(*mesh, [&](const Vec2& x) { return pb.y_d(x, pb.domain); });
    return {mesh, std::move(coeff), Source::nodal(std::vector<double>(f.data(), f.data() + f.size())), yd};
}

InclusionShape perturbation_shape(const RunConfig& cfg, double radius) {
    const auto& pt = cfg.perturbation;
    if (pt.shape_matrix) return {pt.center, radius, *pt.shape_matrix};
    if (pt.lambda == 1.0) return InclusionShape::ball(pt.center, radius);
    return InclusionShape::ellipse(pt.center, radius, pt.lambda, pt.theta);
}

}  // namespace topoderiv::cli
