#ifndef PDEOPT_FEM_HPP
#define PDEOPT_FEM_HPP

#include <span>
#include <utility>
#include <vector>

#include "pdeopt/fields.hpp"
#include "pdeopt/mesh.hpp"
#include "pdeopt/sparse.hpp"

namespace pdeopt {

/// Constant Dirichlet condition on all facets carrying one of the markers.
struct DirichletBC {
  std::vector<int> markers{1};
  double value = 0.0;
};

/// Per-cell geometry of the affine P1 map: signed area and the (constant)
/// gradients of the three barycentric basis functions.
struct CellGeometry {
  double area;
  std::array<std::array<double, 2>, 3> grad;
};
CellGeometry cell_geometry(const TriangleMesh& mesh, int cell);

/// Discrete Laplace operator: A_ij = ∫ ∇φ_i·∇φ_j. Symmetric positive
/// semidefinite with the constants in its kernel. Throws on inverted cells.
SparseMatrix assemble_stiffness(const TriangleMesh& mesh);

/// L² mass matrix, element matrix (area/12)[[2,1,1],[1,2,1],[1,1,2]].
SparseMatrix assemble_mass(const TriangleMesh& mesh);

/// Mass matrix on vector P1 fields (interleaved dofs), block expansion of the
/// scalar mass matrix. Used as the metric that pins rigid modes.
SparseMatrix assemble_vector_mass(const TriangleMesh& mesh);

/// Linear-elasticity bilinear form on vector P1 fields:
///   a(V,W) = ∫ 2 mu eps(V):eps(W) + lambda div V div W + delta V·W,
/// eps the symmetric gradient. With delta = 0 and no boundary conditions the
/// kernel is spanned by the two translations and the linearized rotation.
SparseMatrix assemble_elasticity(const TriangleMesh& mesh, double mu, double lambda,
                                 double delta);

/// Load vector b_i = ∫ source_h φ_i, assembled cell-wise; agrees with
/// assemble_mass(mesh) * source.values up to roundoff.
std::vector<double> assemble_load(const TriangleMesh& mesh, const ScalarField& source);

/// Symmetric row/column elimination of the constrained dofs: unit diagonal,
/// right-hand side moved so constrained dofs solve exactly to bc.value.
/// Requires a symmetric input matrix; `block` is dofs per vertex (1 or 2).
/// Throws if a requested marker does not exist in the mesh.
std::pair<SparseMatrix, std::vector<double>> apply_dirichlet(const SparseMatrix& matrix,
                                                             std::vector<double> rhs,
                                                             const DirichletBC& bc,
                                                             const TriangleMesh& mesh,
                                                             int block = 1);

/// Cost-functional terms evaluated exactly on P1 fields.
struct FunctionalTerm {
  enum class Kind { tracking, tikhonov, linear };
  Kind kind;
  const ScalarField* field = nullptr;    // y or u
  const ScalarField* target = nullptr;   // y_d (tracking only)
  double weight = 1.0;

  static FunctionalTerm tracking(const ScalarField& y, const ScalarField& y_d,
                                 double w = 1.0) {
    return {Kind::tracking, &y, &y_d, w};
  }
  static FunctionalTerm tikhonov(const ScalarField& u, double w) {
    return {Kind::tikhonov, &u, nullptr, w};
  }
  static FunctionalTerm linear(const ScalarField& y, double w = 1.0) {
    return {Kind::linear, &y, nullptr, w};
  }
};

/// TRACKING = w/2 ∫ (y-y_d)², TIKHONOV = w/2 ∫ u², LINEAR = w ∫ y.
double integrate_functional(const TriangleMesh& mesh, std::span<const FunctionalTerm> terms);

}  // namespace pdeopt

#endif
