#pragma once

#include "topoderiv/fem.hpp"
#include "topoderiv/mesh.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace topoderiv::io {

/// 17 significant digits, '.' decimal separator.
std::string fmt(double v);

/// Comma-joined row of formatted values.
std::string row(const std::vector<double>& values);

/// Opens for writing in binary mode (LF line endings); throws Error on failure.
std::ofstream open_out(const std::filesystem::path& path);

/// Parsed CSV: header fields and numeric rows; lines starting with # are skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
Table read_csv(const std::filesystem::path& path);

/// vertices.csv (id,x,y) and elements.csv (id,v0,v1,v2).
void write_mesh_csv(const std::filesystem::path& dir, const Mesh& mesh);
Mesh read_mesh_csv(const std::filesystem::path& dir);

/// node_id,value
void write_nodal_csv(const std::filesystem::path& path, const Nodal& field, const std::string& name = "value");
Nodal read_nodal_csv(const std::filesystem::path& path, int expected_size);

/// element_id,a11,a12,a21,a22
void write_coefficient_csv(const std::filesystem::path& path, const std::vector<Mat2>& values);
/// element_id,value
void write_element_csv(const std::filesystem::path& path, const std::vector<double>& values,
                       const std::string& name = "value");
/// Reads either coefficient layout; scalar rows become value·I.
std::vector<Mat2> read_coefficient_csv(const std::filesystem::path& path, int expected_size);

using NamedCellData = std::pair<std::string, std::vector<double>>;
using NamedPointData = std::pair<std::string, Nodal>;

/// Legacy ASCII VTK unstructured grid of triangles.
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<NamedCellData>& cell_data = {},
               const std::vector<NamedPointData>& point_data = {});

}  // namespace topoderiv::io
