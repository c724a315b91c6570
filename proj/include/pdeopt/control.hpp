#ifndef PDEOPT_CONTROL_HPP
#define PDEOPT_CONTROL_HPP

#include <optional>

#include "pdeopt/fem.hpp"
#include "pdeopt/fields.hpp"
#include "pdeopt/optim.hpp"
#include "pdeopt/solve.hpp"

namespace pdeopt {

struct BoxBounds {
  ScalarField lower;
  ScalarField upper;
};

/// Poisson-constrained tracking problem
///   min 1/2 ||y - y_d||² + alpha/2 ||u||²  s.t.  -Δy = u, y = 0 on the
/// marked boundary, optionally u_a <= u <= u_b pointwise.
///
/// Sign conventions are fixed once through the Lagrangian L = J + <e(y,u), p>
/// with e the weak Poisson operator: the adjoint load is -M(y - y_d) and the
/// reduced derivative density is alpha*u - p. All algorithms below measure
/// gradients in the L² scalar product.
class ControlProblem {
 public:
  ControlProblem(MeshPtr mesh, double alpha, ScalarField desired_state,
                 DirichletBC bc = {}, SolverSettings linear_solver = {});

  const MeshPtr& mesh() const { return mesh_; }
  double alpha() const { return alpha_; }
  const ScalarField& desired_state() const { return desired_state_; }
  const DirichletBC& bc() const { return bc_; }
  const SolverSettings& linear_solver() const { return linear_solver_; }
  void set_linear_solver(const SolverSettings& s) { linear_solver_ = s; }

  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& stiffness_bc() const { return stiffness_bc_; }
  std::span<const int> boundary_dofs() const { return boundary_dofs_; }

  void set_bounds(ScalarField lower, ScalarField upper);
  void set_bounds(double lower, double upper);
  const std::optional<BoxBounds>& bounds() const { return bounds_; }

  /// Solves the state equation K y = M u with homogeneous Dirichlet data.
  ScalarField solve_state(const ScalarField& u) const;

  /// Solves the adjoint equation K p = -M (y - y_d).
  ScalarField solve_adjoint(const ScalarField& y) const;

  /// L² Riesz representative of v -> ∫ (alpha*u - p) v; solves M g = M(alpha*u - p)
  /// so the generic Riesz path is exercised even though spaces coincide.
  ScalarField compute_gradient(const ScalarField& u, const ScalarField& y,
                               const ScalarField& p) const;

  /// Tracking + Tikhonov cost at (u, y).
  double cost(const ScalarField& u, const ScalarField& y) const;

  /// Gauss-Newton/Hessian action on the reduced problem: H v = alpha v - dp,
  /// where K dy = M v and K dp = -M dy. Symmetric positive definite in L².
  ScalarField hessian_action(const ScalarField& v) const;

 private:
  MeshPtr mesh_;
  double alpha_;
  ScalarField desired_state_;
  DirichletBC bc_;
  SolverSettings linear_solver_;
  std::optional<BoxBounds> bounds_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  SparseMatrix stiffness_bc_;
  std::vector<int> boundary_dofs_;

  ScalarField solve_with_load(std::vector<double> load,
                              const SolverSettings* settings = nullptr) const;
};

/// The unit-square benchmark: alpha = 1e-4, y_d = x1²(1-x1) x2²(1-x2),
/// homogeneous Dirichlet data on marker 1.
ControlProblem make_benchmark_control_problem(int n);

/// Nodal clamp of u into [lower, upper].
ScalarField project_box(const ScalarField& u, const ScalarField& lower,
                        const ScalarField& upper);

struct LineSearchOutcome {
  double step;
  ScalarField control;
  ScalarField state;
  double cost;
};

class LineSearchFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Armijo backtracking on the reduced cost from `u` along `direction`; trial
/// controls are box-projected when the problem has bounds. Throws
/// LineSearchFailure after 30 halvings.
LineSearchOutcome armijo_line_search(const ControlProblem& problem, const ScalarField& u,
                                     const ScalarField& direction, const ScalarField& gradient,
                                     double t_init, double epsilon = 1e-4);

struct ControlSolution {
  ScalarField control;
  ScalarField state;
  OptimizationHistory history;
};

/// Runs the configured algorithm from u0 (zero when absent) until
///   stationarity <= atol + rtol * initial stationarity,
/// where stationarity is the L² norm of the gradient, or of u - P(u - g) when
/// bounds are present. PDAS instead iterates active sets until they repeat.
ControlSolution optimize(const ControlProblem& problem, const OptimizerConfig& config,
                         const ScalarField* u0 = nullptr);

}  // namespace pdeopt

#endif
