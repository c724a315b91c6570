#ifndef PDEOPT_SHAPE_HPP
#define PDEOPT_SHAPE_HPP

#include <functional>

#include "pdeopt/fem.hpp"
#include "pdeopt/fields.hpp"
#include "pdeopt/optim.hpp"
#include "pdeopt/solve.hpp"

namespace pdeopt {

/// Shape optimization of min ∫ y dx subject to -Δy = f, y = 0 on the moving
/// boundary. The scalar product for shape gradients is the linear-elasticity
/// form a(V,W) with parameters (mu, lambda, delta); deformation is free on
/// bdry_def markers and clamped on bdry_fix markers. With no fixed boundary
/// and delta = 0 the form is singular on the rigid modes, which are pinned by
/// projection in the vector-mass metric.
struct ShapeProblem {
  MeshPtr initial_mesh;
  std::function<double(double, double)> source;
  std::function<std::array<double, 2>(double, double)> source_gradient;
  double mu = 1.0;
  double lambda = 0.0;
  double delta = 0.0;
  std::vector<int> bdry_def{1};
  std::vector<int> bdry_fix{};
  DirichletBC bc{{1}, 0.0};
  SolverSettings linear_solver{};
  double quality_gate_factor = 0.1;

  void validate() const;
};

/// Unit-disc benchmark: f(x) = 2.5 (x1 + 0.4 - x2²)² + x1² + x2² - 1 with its
/// analytic gradient, elasticity parameters (1, 0, 0), deformable boundary 1.
ShapeProblem make_benchmark_shape_problem(int n);

/// Nodal translation and linearized-rotation fields (-x2, x1): the kernel of
/// the symmetric gradient on vector P1 spaces.
std::vector<std::vector<double>> rigid_modes(const TriangleMesh& mesh);

ScalarField solve_state_shape(const MeshPtr& mesh, const ShapeProblem& problem);

/// Adjoint of the volume cost: K p = -M 1; independent of the state.
ScalarField solve_adjoint_shape(const MeshPtr& mesh, const ShapeProblem& problem);

/// Volume form of the shape derivative, assembled against every vector P1
/// basis deformation:
///   dJ[W] = ∫ (y + ∇y·∇p - f p) div W - (DW + DW') ∇y·∇p dx - ∫ I[(∇f·W)] p dx,
/// the last term interpolated nodally so the vector is the exact derivative
/// of the discrete cost under vertex motion.
std::vector<double> assemble_shape_derivative(const TriangleMesh& mesh, const ScalarField& y,
                                              const ScalarField& p,
                                              const ShapeProblem& problem);

/// Riesz representative of the derivative in the elasticity scalar product:
/// solves a(G, W) = dJ[W], on the complement of the rigid modes when the
/// form is singular.
VectorField compute_shape_gradient(const TriangleMesh& mesh, std::span<const double> derivative,
                                   const ShapeProblem& problem);

struct ShapeSolution {
  MeshPtr mesh;
  ScalarField state;
  double cost = 0.0;
  OptimizationHistory history;
  double worst_radius_ratio = 1.0;  // over accepted iterates
  int worst_inverted = 0;
};

using ShapeObserver =
    std::function<void(int iteration, const TriangleMesh&, const ScalarField& state)>;

/// Deformation loop: state/adjoint solve, derivative assembly, elasticity
/// Riesz solve, gd/ncg/lbfgs direction in the a(·,·) product, Armijo with the
/// mesh-quality gate (inverted cells or radius ratio below
/// quality_gate_factor times the initial value reject a trial).
ShapeSolution optimize_shape(const ShapeProblem& problem, const OptimizerConfig& config,
                             const ShapeObserver& observer = {});

}  // namespace pdeopt

#endif
