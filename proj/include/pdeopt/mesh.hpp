#ifndef PDEOPT_MESH_HPP
#define PDEOPT_MESH_HPP

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace pdeopt {

/// An oriented boundary edge carrying an integer marker.
struct BoundaryFacet {
  std::array<int, 2> vertices;
  int marker;
};

/// 2D simplicial mesh. Cells are counter-clockwise vertex triples; every
/// boundary edge appears exactly once in boundary_facets. Meshes are plain
/// values and never mutated after construction, so they can be shared
/// read-only across threads.
struct TriangleMesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<BoundaryFacet> boundary_facets;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }

  /// Signed (doubled by nothing) area of cell c; positive for CCW cells.
  double signed_area(int c) const;

  /// Sum of signed cell areas.
  double total_area() const;

  /// Indices of all vertices lying on facets whose marker is in `markers`.
  /// Sorted, duplicate-free.
  std::vector<int> boundary_vertices(std::span<const int> markers) const;

  /// Set of distinct facet markers present in the mesh.
  std::vector<int> facet_markers() const;
};

struct MeshQualityReport {
  double min_signed_area;
  double min_radius_ratio;  // min over cells of 2*inradius/circumradius, in [0,1]
  int num_inverted;         // cells with signed area <= 0
};

/// Uniform mesh of the unit square (0,1)^2: (n+1)^2 lattice vertices, each of
/// the n x n squares split along its lower-left-to-upper-right diagonal into
/// two triangles. All boundary facets are marked 1. Throws on n < 1.
TriangleMesh unit_square_mesh(int n);

/// Ring mesh of the unit disc: a center vertex plus rings k = 1..n of 6k
/// equally spaced vertices at radius k/n, triangulated sector by sector.
/// 1 + 3n(n+1) vertices, 6n^2 cells; the outer ring facets are marked 1.
/// Throws on n < 1.
TriangleMesh unit_disc_mesh(int n);

/// Moves every vertex by scale * displacement (two interleaved components per
/// vertex); connectivity and markers are copied unchanged. Validity of the
/// result is the caller's concern (see quality_report).
TriangleMesh deform(const TriangleMesh& mesh, std::span<const double> displacement,
                    double scale);

MeshQualityReport quality_report(const TriangleMesh& mesh);

/// Checks the TriangleMesh invariants: positive cell areas, in-range indices,
/// edge-manifoldness (interior edges shared by exactly two cells, boundary
/// facets matching single-cell edges one-to-one), and absence of duplicate
/// vertices within 1e-12. Throws std::runtime_error describing the first
/// violation found.
void validate(const TriangleMesh& mesh);

}  // namespace pdeopt

#endif
