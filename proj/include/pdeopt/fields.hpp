#ifndef PDEOPT_FIELDS_HPP
#define PDEOPT_FIELDS_HPP

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "pdeopt/mesh.hpp"

namespace pdeopt {

using MeshPtr = std::shared_ptr<const TriangleMesh>;

/// P1 nodal scalar field: one coefficient per mesh vertex.
struct ScalarField {
  MeshPtr mesh;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(MeshPtr m, double fill = 0.0)
      : mesh(std::move(m)), values(mesh->num_vertices(), fill) {}
  ScalarField(MeshPtr m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v)) {}
};

/// P1 nodal vector field; components interleaved as (x0, y0, x1, y1, ...).
struct VectorField {
  MeshPtr mesh;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(MeshPtr m, double fill = 0.0)
      : mesh(std::move(m)), values(2 * mesh->num_vertices(), fill) {}
  VectorField(MeshPtr m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v)) {}
};

ScalarField interpolate(MeshPtr mesh, const std::function<double(double, double)>& f);
VectorField interpolate_vector(
    MeshPtr mesh, const std::function<std::array<double, 2>(double, double)>& f);

inline TriangleMesh deform(const TriangleMesh& mesh, const VectorField& displacement,
                           double scale) {
  return deform(mesh, std::span<const double>(displacement.values), scale);
}

}  // namespace pdeopt

#endif
