#include "topoderiv/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace topoderiv::io {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string row(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += fmt(values[i]);
    }
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

namespace {

double parse_double(std::string_view field, const std::filesystem::path& path, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw InputError(path.string() + ":" + std::to_string(line) + ": not a number: '" + std::string(field) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

int as_index(double v, const std::filesystem::path& path) {
    if (v != static_cast<double>(static_cast<long long>(v)) || v < 0.0)
        throw InputError(path.string() + ": expected a non-negative integer id");
    return static_cast<int>(v);
}

}  // namespace

Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line);
        if (t.header.empty()) {
            for (auto f : fields) t.header.emplace_back(f);
            continue;
        }
        if (fields.size() != t.header.size())
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
        std::vector<double> r;
        r.reserve(fields.size());
        for (auto f : fields) r.push_back(parse_double(f, path, lineno));
        t.rows.push_back(std::move(r));
    }
    if (t.header.empty()) throw InputError(path.string() + ": empty file");
    return t;
}

void write_mesh_csv(const std::filesystem::path& dir, const Mesh& mesh) {
    auto v = open_out(dir / "vertices.csv");
    v << "id,x,y\n";
    for (int i = 0; i < mesh.num_vertices(); ++i)
        v << i << ',' << fmt(mesh.vertex(i).x()) << ',' << fmt(mesh.vertex(i).y()) << '\n';
    auto e = open_out(dir / "elements.csv");
    e << "id,v0,v1,v2\n";
    for (int i = 0; i < mesh.num_elements(); ++i) {
        const auto& t = mesh.element(i);
        e << i << ',' << t[0] << ',' << t[1] << ',' << t[2] << '\n';
    }
}

Mesh read_mesh_csv(const std::filesystem::path& dir) {
    const Table vt = read_csv(dir / "vertices.csv");
    const Table et = read_csv(dir / "elements.csv");
    if (vt.header.size() != 3 || et.header.size() != 4) throw InputError("mesh csv: unexpected columns");
    std::vector<Vec2> verts(vt.rows.size());
    std::vector<char> seen(vt.rows.size(), 0);
    for (const auto& r : vt.rows) {
        const int id = as_index(r[0], dir / "vertices.csv");
        if (id >= static_cast<int>(verts.size()) || seen[id]) throw InputError("mesh csv: vertex ids must be 0..n-1");
        seen[id] = 1;
        verts[id] = {r[1], r[2]};
    }
    std::vector<Triangle> elems(et.rows.size());
    std::vector<char> seen_e(et.rows.size(), 0);
    for (const auto& r : et.rows) {
        const int id = as_index(r[0], dir / "elements.csv");
        if (id >= static_cast<int>(elems.size()) || seen_e[id]) throw InputError("mesh csv: element ids must be 0..m-1");
        seen_e[id] = 1;
        for (int k = 0; k < 3; ++k) {
            const int v = as_index(r[k + 1], dir / "elements.csv");
            if (v >= static_cast<int>(verts.size())) throw InputError("mesh csv: element references unknown vertex");
            elems[id][k] = v;
        }
    }
    return Mesh(std::move(verts), std::move(elems));
}

void write_nodal_csv(const std::filesystem::path& path, const Nodal& field, const std::string& name) {
    auto out = open_out(path);
    out << "node_id," << name << '\n';
    for (int i = 0; i < field.size(); ++i) out << i << ',' << fmt(field[i]) << '\n';
}

Nodal read_nodal_csv(const std::filesystem::path& path, int expected_size) {
    const Table t = read_csv(path);
    if (t.header.size() != 2) throw InputError(path.string() + ": expected node_id,value");
    if (static_cast<int>(t.rows.size()) != expected_size) throw InputError(path.string() + ": wrong number of nodes");
    Nodal out = Nodal::Zero(expected_size);
    std::vector<char> seen(expected_size, 0);
    for (const auto& r : t.rows) {
        const int id = as_index(r[0], path);
        if (id >= expected_size || seen[id]) throw InputError(path.string() + ": node ids must be 0..n-1");
        seen[id] = 1;
        out[id] = r[1];
    }
    return out;
}

void write_coefficient_csv(const std::filesystem::path& path, const std::vector<Mat2>& values) {
    auto out = open_out(path);
    out << "element_id,a11,a12,a21,a22\n";
    for (std::size_t e = 0; e < values.size(); ++e) {
        const Mat2& a = values[e];
        out << e << ',' << row({a(0, 0), a(0, 1), a(1, 0), a(1, 1)}) << '\n';
    }
}

void write_element_csv(const std::filesystem::path& path, const std::vector<double>& values, const std::string& name) {
    auto out = open_out(path);
    out << "element_id," << name << '\n';
    for (std::size_t e = 0; e < values.size(); ++e) out << e << ',' << fmt(values[e]) << '\n';
}

std::vector<Mat2> read_coefficient_csv(const std::filesystem::path& path, int expected_size) {
    const Table t = read_csv(path);
    if (t.header.size() != 2 && t.header.size() != 5)
        throw InputError(path.string() + ": expected element_id,value or element_id,a11,a12,a21,a22");
    if (static_cast<int>(t.rows.size()) != expected_size) throw InputError(path.string() + ": wrong number of elements");
    std::vector<Mat2> out(expected_size, Mat2::Zero());
    std::vector<char> seen(expected_size, 0);
    for (const auto& r : t.rows) {
        const int id = as_index(r[0], path);
        if (id >= expected_size || seen[id]) throw InputError(path.string() + ": element ids must be 0..m-1");
        seen[id] = 1;
        if (r.size() == 2)
            out[id] = r[1] * Mat2::Identity();
        else
            out[id] << r[1], r[2], r[3], r[4];
    }
    return out;
}

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<NamedCellData>& cell_data,
               const std::vector<NamedPointData>& point_data) {
    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\ntopoderiv\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Vec2& v : mesh.vertices()) out << fmt(v.x()) << ' ' << fmt(v.y()) << " 0\n";
    out << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
    for (const auto& t : mesh.elements()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << mesh.num_elements() << '\n';
    for (int e = 0; e < mesh.num_elements(); ++e) out << "5\n";
    if (!cell_data.empty()) {
        out << "CELL_DATA " << mesh.num_elements() << '\n';
        for (const auto& [name, values] : cell_data) {
            if (static_cast<int>(values.size()) != mesh.num_elements()) throw InputError("vtk: cell data length mismatch");
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : values) out << fmt(v) << '\n';
        }
    }
    if (!point_data.empty()) {
        out << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& [name, values] : point_data) {
            if (values.size() != mesh.num_vertices()) throw InputError("vtk: point data length mismatch");
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (int i = 0; i < values.size(); ++i) out << fmt(values[i]) << '\n';
        }
    }
}

}  // namespace topoderiv::io
