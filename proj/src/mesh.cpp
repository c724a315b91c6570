#include "pdeopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

namespace pdeopt {

namespace {

double cell_signed_area(const TriangleMesh& mesh, const std::array<int, 3>& cell) {
  const auto& a = mesh.vertices[cell[0]];
  const auto& b = mesh.vertices[cell[1]];
  const auto& c = mesh.vertices[cell[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

}  // namespace

double TriangleMesh::signed_area(int c) const { return cell_signed_area(*this, cells[c]); }

double TriangleMesh::total_area() const {
  double area = 0.0;
  for (const auto& cell : cells) area += cell_signed_area(*this, cell);
  return area;
}

std::vector<int> TriangleMesh::boundary_vertices(std::span<const int> markers) const {
  std::vector<int> out;
  for (const auto& facet : boundary_facets) {
    if (std::find(markers.begin(), markers.end(), facet.marker) != markers.end()) {
      out.push_back(facet.vertices[0]);
      out.push_back(facet.vertices[1]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> TriangleMesh::facet_markers() const {
  std::set<int> markers;
  for (const auto& facet : boundary_facets) markers.insert(facet.marker);
  return {markers.begin(), markers.end()};
}

TriangleMesh unit_square_mesh(int n) {
  if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be >= 1");
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  const double h = 1.0 / n;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.push_back({i * h, j * h});

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.cells.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Square (i,j) split along the diagonal from its lower-left to its
      // upper-right corner.
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      mesh.cells.push_back({v00, v10, v11});
      mesh.cells.push_back({v00, v11, v01});
    }
  }

  for (int i = 0; i < n; ++i) {
    mesh.boundary_facets.push_back({{vid(i, 0), vid(i + 1, 0)}, 1});
    mesh.boundary_facets.push_back({{vid(n, i), vid(n, i + 1)}, 1});
    mesh.boundary_facets.push_back({{vid(i + 1, n), vid(i, n)}, 1});
    mesh.boundary_facets.push_back({{vid(0, i + 1), vid(0, i)}, 1});
  }
  return mesh;
}

TriangleMesh unit_disc_mesh(int n) {
  if (n < 1) throw std::invalid_argument("unit_disc_mesh: n must be >= 1");
  TriangleMesh mesh;
  mesh.vertices.reserve(1 + 3 * static_cast<std::size_t>(n) * (n + 1));
  mesh.vertices.push_back({0.0, 0.0});

  // Ring k holds 6k vertices at radius k/n; rings are stored consecutively.
  auto ring_start = [](int k) { return 1 + 3 * k * (k - 1); };
  for (int k = 1; k <= n; ++k) {
    const double r = static_cast<double>(k) / n;
    for (int j = 0; j < 6 * k; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / (6.0 * k);
      mesh.vertices.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
  }

  mesh.cells.reserve(6 * static_cast<std::size_t>(n) * n);
  for (int k = 1; k <= n; ++k) {
    const int outer = ring_start(k);
    const int inner = ring_start(k - 1);
    for (int s = 0; s < 6; ++s) {
      auto outer_id = [&](int t) { return outer + (s * k + t) % (6 * k); };
      auto inner_id = [&](int t) {
        return k == 1 ? 0 : inner + (s * (k - 1) + t) % (6 * (k - 1));
      };
      for (int t = 0; t < k; ++t)
        mesh.cells.push_back({outer_id(t), outer_id(t + 1), inner_id(t)});
      for (int t = 0; t + 1 < k; ++t)
        mesh.cells.push_back({inner_id(t), outer_id(t + 1), inner_id(t + 1)});
    }
  }

  const int outer = ring_start(n);
  for (int j = 0; j < 6 * n; ++j)
    mesh.boundary_facets.push_back({{outer + j, outer + (j + 1) % (6 * n)}, 1});
  return mesh;
}

TriangleMesh deform(const TriangleMesh& mesh, std::span<const double> displacement,
                    double scale) {
  if (displacement.size() != 2 * mesh.vertices.size())
    throw std::invalid_argument("deform: displacement size does not match vertex count");
  TriangleMesh out = mesh;
  for (std::size_t v = 0; v < out.vertices.size(); ++v) {
    out.vertices[v][0] += scale * displacement[2 * v];
    out.vertices[v][1] += scale * displacement[2 * v + 1];
  }
  return out;
}

MeshQualityReport quality_report(const TriangleMesh& mesh) {
  MeshQualityReport report{std::numeric_limits<double>::infinity(), 1.0, 0};
  for (const auto& cell : mesh.cells) {
    const double area = cell_signed_area(mesh, cell);
    report.min_signed_area = std::min(report.min_signed_area, area);
    if (area <= 0.0) {
      ++report.num_inverted;
      report.min_radius_ratio = 0.0;
      continue;
    }
    const auto& p0 = mesh.vertices[cell[0]];
    const auto& p1 = mesh.vertices[cell[1]];
    const auto& p2 = mesh.vertices[cell[2]];
    const double a = std::hypot(p2[0] - p1[0], p2[1] - p1[1]);
    const double b = std::hypot(p0[0] - p2[0], p0[1] - p2[1]);
    const double c = std::hypot(p1[0] - p0[0], p1[1] - p0[1]);
    const double s = 0.5 * (a + b + c);
    const double inradius = area / s;
    const double circumradius = a * b * c / (4.0 * area);
    report.min_radius_ratio =
        std::min(report.min_radius_ratio, 2.0 * inradius / circumradius);
  }
  if (mesh.cells.empty()) report.min_signed_area = 0.0;
  return report;
}

void validate(const TriangleMesh& mesh) {
  const int nv = mesh.num_vertices();
  for (const auto& cell : mesh.cells) {
    for (int v : cell)
      if (v < 0 || v >= nv) throw std::runtime_error("mesh: cell vertex index out of range");
    if (cell_signed_area(mesh, cell) <= 0.0)
      throw std::runtime_error("mesh: cell with non-positive signed area");
  }
  for (const auto& facet : mesh.boundary_facets)
    for (int v : facet.vertices)
      if (v < 0 || v >= nv) throw std::runtime_error("mesh: facet vertex index out of range");

  // Edge-manifold check: count cells adjacent to each undirected edge.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& cell : mesh.cells) {
    for (int e = 0; e < 3; ++e) {
      int a = cell[e], b = cell[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) throw std::runtime_error("mesh: edge shared by more than two cells");
  }
  std::set<std::pair<int, int>> facet_edges;
  for (const auto& facet : mesh.boundary_facets) {
    int a = facet.vertices[0], b = facet.vertices[1];
    if (a > b) std::swap(a, b);
    if (!facet_edges.insert({a, b}).second)
      throw std::runtime_error("mesh: duplicate boundary facet");
    auto it = edge_count.find({a, b});
    if (it == edge_count.end()) throw std::runtime_error("mesh: facet is not a cell edge");
    if (it->second != 1)
      throw std::runtime_error("mesh: boundary facet on an interior edge");
  }
  for (const auto& [edge, count] : edge_count) {
    if (count == 1 && !facet_edges.count(edge))
      throw std::runtime_error("mesh: unmarked boundary edge");
  }

  // Duplicate vertices within 1e-12: sort by x and scan a sliding window.
  std::vector<int> order(nv);
  for (int i = 0; i < nv; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return mesh.vertices[i][0] < mesh.vertices[j][0];
  });
  constexpr double tol = 1e-12;
  for (int i = 0; i < nv; ++i) {
    for (int j = i + 1; j < nv; ++j) {
      const auto& p = mesh.vertices[order[i]];
      const auto& q = mesh.vertices[order[j]];
      if (q[0] - p[0] > tol) break;
      if (std::abs(q[1] - p[1]) <= tol && std::abs(q[0] - p[0]) <= tol)
        throw std::runtime_error("mesh: duplicate vertices " + std::to_string(order[i]) +
                                 " and " + std::to_string(order[j]));
    }
  }
}

}  // namespace pdeopt
