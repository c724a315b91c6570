#include "pdeopt/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdeopt {

ScalarField interpolate(MeshPtr mesh, const std::function<double(double, double)>& f) {
  ScalarField out(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v)
    out.values[v] = f(mesh->vertices[v][0], mesh->vertices[v][1]);
  return out;
}

VectorField interpolate_vector(MeshPtr mesh,
                               const std::function<std::array<double, 2>(double, double)>& f) {
  VectorField out(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    const auto val = f(mesh->vertices[v][0], mesh->vertices[v][1]);
    out.values[2 * v] = val[0];
    out.values[2 * v + 1] = val[1];
  }
  return out;
}

CellGeometry cell_geometry(const TriangleMesh& mesh, int cell) {
  const auto& c = mesh.cells[cell];
  const auto& p0 = mesh.vertices[c[0]];
  const auto& p1 = mesh.vertices[c[1]];
  const auto& p2 = mesh.vertices[c[2]];
  CellGeometry g;
  g.area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
  const double inv2a = 1.0 / (2.0 * g.area);
  // grad λ_i = rot90(p_{i+2} - p_{i+1}) / (2 area), rot90(v) = (-v_y, v_x)
  const std::array<const std::array<double, 2>*, 3> p = {&p0, &p1, &p2};
  for (int i = 0; i < 3; ++i) {
    const auto& a = *p[(i + 1) % 3];
    const auto& b = *p[(i + 2) % 3];
    g.grad[i] = {-(b[1] - a[1]) * inv2a, (b[0] - a[0]) * inv2a};
  }
  return g;
}

namespace {

void require_not_inverted(double area, const char* op) {
  if (!(area > 0.0)) throw std::runtime_error(std::string(op) + ": inverted cell in mesh");
}

}  // namespace

SparseMatrix assemble_stiffness(const TriangleMesh& mesh) {
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(9 * mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    require_not_inverted(g.area, "assemble_stiffness");
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        triplets.push_back({cell[i], cell[j],
                            g.area * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1])});
  }
  return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(triplets));
}

SparseMatrix assemble_mass(const TriangleMesh& mesh) {
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(9 * mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.signed_area(c);
    require_not_inverted(area, "assemble_mass");
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        triplets.push_back({cell[i], cell[j], area / 12.0 * (i == j ? 2.0 : 1.0)});
  }
  return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(triplets));
}

SparseMatrix assemble_vector_mass(const TriangleMesh& mesh) {
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(18 * mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.signed_area(c);
    require_not_inverted(area, "assemble_vector_mass");
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double m = area / 12.0 * (i == j ? 2.0 : 1.0);
        triplets.push_back({2 * cell[i], 2 * cell[j], m});
        triplets.push_back({2 * cell[i] + 1, 2 * cell[j] + 1, m});
      }
  }
  return SparseMatrix::from_triplets(2 * mesh.num_vertices(), std::move(triplets));
}

SparseMatrix assemble_elasticity(const TriangleMesh& mesh, double mu, double lambda,
                                 double delta) {
  if (!(mu > 0.0)) throw std::invalid_argument("assemble_elasticity: mu must be positive");
  if (lambda < 0.0 || delta < 0.0)
    throw std::invalid_argument("assemble_elasticity: lambda and delta must be >= 0");
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(36 * mesh.cells.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    require_not_inverted(g.area, "assemble_elasticity");
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double gij = g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1];
        const double mass = g.area / 12.0 * (i == j ? 2.0 : 1.0);
        for (int comp_i = 0; comp_i < 2; ++comp_i) {
          for (int comp_j = 0; comp_j < 2; ++comp_j) {
            // 2 eps(λ_i e_a) : eps(λ_j e_b) = δ_ab ∇λ_i·∇λ_j + ∂_b λ_i ∂_a λ_j
            double value = g.area * (mu * ((comp_i == comp_j ? gij : 0.0) +
                                           g.grad[i][comp_j] * g.grad[j][comp_i]) +
                                     lambda * g.grad[i][comp_i] * g.grad[j][comp_j]);
            if (comp_i == comp_j) value += delta * mass;
            triplets.push_back({2 * cell[i] + comp_i, 2 * cell[j] + comp_j, value});
          }
        }
      }
    }
  }
  return SparseMatrix::from_triplets(2 * mesh.num_vertices(), std::move(triplets));
}

std::vector<double> assemble_load(const TriangleMesh& mesh, const ScalarField& source) {
  if (static_cast<int>(source.values.size()) != mesh.num_vertices())
    throw std::invalid_argument("assemble_load: source field does not match mesh");
  std::vector<double> b(mesh.num_vertices(), 0.0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.signed_area(c);
    require_not_inverted(area, "assemble_load");
    const auto& cell = mesh.cells[c];
    const double s0 = source.values[cell[0]];
    const double s1 = source.values[cell[1]];
    const double s2 = source.values[cell[2]];
    const double sum = s0 + s1 + s2;
    b[cell[0]] += area / 12.0 * (sum + s0);
    b[cell[1]] += area / 12.0 * (sum + s1);
    b[cell[2]] += area / 12.0 * (sum + s2);
  }
  return b;
}

std::pair<SparseMatrix, std::vector<double>> apply_dirichlet(const SparseMatrix& matrix,
                                                             std::vector<double> rhs,
                                                             const DirichletBC& bc,
                                                             const TriangleMesh& mesh,
                                                             int block) {
  if (bc.markers.empty()) throw std::invalid_argument("apply_dirichlet: empty marker set");
  const auto present = mesh.facet_markers();
  for (int m : bc.markers)
    if (std::find(present.begin(), present.end(), m) == present.end())
      throw std::invalid_argument("apply_dirichlet: marker " + std::to_string(m) +
                                  " not found in mesh");
  const auto vertices = mesh.boundary_vertices(bc.markers);
  std::vector<int> dofs;
  dofs.reserve(block * vertices.size());
  for (int v : vertices)
    for (int comp = 0; comp < block; ++comp) dofs.push_back(block * v + comp);

  std::vector<char> constrained(matrix.dim(), 0);
  for (int dof : dofs) constrained[dof] = 1;

  // Move the coupling to the right-hand side (uses symmetry of the input),
  // then zero rows and columns with a unit diagonal.
  if (bc.value != 0.0) {
    const auto offsets = matrix.row_offsets();
    const auto columns = matrix.columns();
    const auto values = matrix.values();
    for (int dof : dofs)
      for (int k = offsets[dof]; k < offsets[dof + 1]; ++k)
        if (!constrained[columns[k]]) rhs[columns[k]] -= values[k] * bc.value;
  }
  SparseMatrix out = matrix;
  out.eliminate_symmetric(dofs);
  for (int dof : dofs) rhs[dof] = bc.value;
  return {std::move(out), std::move(rhs)};
}

double integrate_functional(const TriangleMesh& mesh, std::span<const FunctionalTerm> terms) {
  for (const auto& term : terms) {
    if (term.field == nullptr ||
        static_cast<int>(term.field->values.size()) != mesh.num_vertices())
      throw std::invalid_argument("integrate_functional: field does not match mesh");
    if (term.kind == FunctionalTerm::Kind::tracking &&
        (term.target == nullptr ||
         static_cast<int>(term.target->values.size()) != mesh.num_vertices()))
      throw std::invalid_argument("integrate_functional: tracking target does not match mesh");
  }

  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.signed_area(c);
    const auto& cell = mesh.cells[c];
    for (const auto& term : terms) {
      std::array<double, 3> v;
      switch (term.kind) {
        case FunctionalTerm::Kind::tracking:
          for (int i = 0; i < 3; ++i)
            v[i] = term.field->values[cell[i]] - term.target->values[cell[i]];
          break;
        case FunctionalTerm::Kind::tikhonov:
          for (int i = 0; i < 3; ++i) v[i] = term.field->values[cell[i]];
          break;
        case FunctionalTerm::Kind::linear: {
          double sum = 0.0;
          for (int i = 0; i < 3; ++i) sum += term.field->values[cell[i]];
          total += term.weight * area / 3.0 * sum;
          continue;
        }
        default:
          throw std::invalid_argument("integrate_functional: unknown term kind");
      }
      // w/2 * v' M_cell v with M_cell = area/12 [[2,1,1],[1,2,1],[1,1,2]]
      const double sum = v[0] + v[1] + v[2];
      const double quad =
          area / 12.0 * (sum * sum + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      total += 0.5 * term.weight * quad;
    }
  }
  return total;
}

}  // namespace pdeopt
