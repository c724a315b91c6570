#include "pdeopt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pdeopt {

namespace {

std::string fp(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

void export_history(const OptimizationHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_history: cannot open '" + path + "' for writing");
  out << "iter,cost,grad_norm,step_size\n";
  for (const auto& row : history.rows)
    out << row.iteration << ',' << fp(row.cost) << ',' << fp(row.gradient_norm) << ','
        << fp(row.step_size) << '\n';
  if (!out) throw IoError("export_history: write failure on '" + path + "'");
}

std::vector<HistoryRow> read_history_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_history_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "iter,cost,grad_norm,step_size")
    throw IoError("read_history_csv: bad header in '" + path + "'");
  std::vector<HistoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    HistoryRow row{};
    std::stringstream ss(line);
    std::string item;
    std::getline(ss, item, ',');
    row.iteration = std::stoi(item);
    std::getline(ss, item, ',');
    row.cost = std::stod(item);
    std::getline(ss, item, ',');
    row.gradient_norm = std::stod(item);
    std::getline(ss, item, ',');
    row.step_size = std::stod(item);
    rows.push_back(row);
  }
  return rows;
}

void export_vtk(const TriangleMesh& mesh, const std::vector<VtkField>& fields,
                const std::string& path) {
  for (const auto& field : fields) {
    if (field.name.empty() || field.name.find(' ') != std::string::npos)
      throw IoError("export_vtk: invalid field name '" + field.name + "'");
    const std::size_t expected =
        std::holds_alternative<const ScalarField*>(field.data)
            ? mesh.vertices.size()
            : 2 * mesh.vertices.size();
    const std::size_t actual =
        std::holds_alternative<const ScalarField*>(field.data)
            ? std::get<const ScalarField*>(field.data)->values.size()
            : std::get<const VectorField*>(field.data)->values.size();
    if (expected != actual)
      throw IoError("export_vtk: field '" + field.name + "' does not match the mesh");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_vtk: cannot open '" + path + "' for writing");
  out << "# vtk DataFile Version 3.0\n";
  out << "pdeopt output\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices) out << fp(v[0]) << ' ' << fp(v[1]) << " 0\n";
  out << "CELLS " << mesh.num_cells() << ' ' << 4 * mesh.num_cells() << '\n';
  for (const auto& c : mesh.cells) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  out << "CELL_TYPES " << mesh.num_cells() << '\n';
  for (int c = 0; c < mesh.num_cells(); ++c) out << "5\n";
  if (!fields.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& field : fields) {
      if (std::holds_alternative<const ScalarField*>(field.data)) {
        out << "SCALARS " << field.name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (double v : std::get<const ScalarField*>(field.data)->values) out << fp(v) << '\n';
      } else {
        out << "VECTORS " << field.name << " double\n";
        const auto& values = std::get<const VectorField*>(field.data)->values;
        for (std::size_t i = 0; i < values.size(); i += 2)
          out << fp(values[i]) << ' ' << fp(values[i + 1]) << " 0\n";
      }
    }
  }
  if (!out) throw IoError("export_vtk: write failure on '" + path + "'");
}

}  // namespace pdeopt
