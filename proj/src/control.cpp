#include "pdeopt/control.hpp"

#include <algorithm>
#include <cmath>

namespace pdeopt {

namespace {

std::vector<double> subtract(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace

ControlProblem::ControlProblem(MeshPtr mesh, double alpha, ScalarField desired_state,
                               DirichletBC bc, SolverSettings linear_solver)
    : mesh_(std::move(mesh)),
      alpha_(alpha),
      desired_state_(std::move(desired_state)),
      bc_(std::move(bc)),
      linear_solver_(std::move(linear_solver)) {
  if (!(alpha_ > 0.0)) throw std::invalid_argument("ControlProblem: alpha must be positive");
  if (static_cast<int>(desired_state_.values.size()) != mesh_->num_vertices())
    throw std::invalid_argument("ControlProblem: desired state does not match mesh");
  mass_ = assemble_mass(*mesh_);
  stiffness_ = assemble_stiffness(*mesh_);
  std::vector<double> dummy(mesh_->num_vertices(), 0.0);
  auto [bc_matrix, bc_rhs] = apply_dirichlet(stiffness_, std::move(dummy), bc_, *mesh_);
  stiffness_bc_ = std::move(bc_matrix);
  boundary_dofs_ = mesh_->boundary_vertices(bc_.markers);
}

void ControlProblem::set_bounds(ScalarField lower, ScalarField upper) {
  if (static_cast<int>(lower.values.size()) != mesh_->num_vertices() ||
      static_cast<int>(upper.values.size()) != mesh_->num_vertices())
    throw std::invalid_argument("ControlProblem: bounds do not match mesh");
  for (int i = 0; i < mesh_->num_vertices(); ++i)
    if (lower.values[i] > upper.values[i])
      throw std::invalid_argument("ControlProblem: lower bound exceeds upper bound");
  bounds_ = BoxBounds{std::move(lower), std::move(upper)};
}

void ControlProblem::set_bounds(double lower, double upper) {
  set_bounds(ScalarField(mesh_, lower), ScalarField(mesh_, upper));
}

ScalarField ControlProblem::solve_with_load(std::vector<double> load,
                                            const SolverSettings* settings) const {
  const SolverSettings& solver = settings ? *settings : linear_solver_;
  // Homogeneous Dirichlet rows: zero the load at constrained dofs. The
  // nonhomogeneous constant case goes through apply_dirichlet directly.
  if (bc_.value == 0.0) {
    for (int dof : boundary_dofs_) load[dof] = 0.0;
    return {mesh_, cg_solve(stiffness_bc_, load, solver)};
  }
  auto [matrix, rhs] = apply_dirichlet(stiffness_, std::move(load), bc_, *mesh_);
  return {mesh_, cg_solve(matrix, rhs, solver)};
}

ScalarField ControlProblem::solve_state(const ScalarField& u) const {
  if (static_cast<int>(u.values.size()) != mesh_->num_vertices())
    throw std::invalid_argument("solve_state: control does not match mesh");
  return solve_with_load(mass_.apply(u.values));
}

ScalarField ControlProblem::solve_adjoint(const ScalarField& y) const {
  std::vector<double> diff = subtract(y.values, desired_state_.values);
  std::vector<double> load = mass_.apply(diff);
  for (double& v : load) v = -v;
  return solve_with_load(std::move(load));
}

ScalarField ControlProblem::compute_gradient(const ScalarField& u, const ScalarField& y,
                                             const ScalarField& p) const {
  (void)y;
  std::vector<double> density(u.values.size());
  for (std::size_t i = 0; i < density.size(); ++i)
    density[i] = alpha_ * u.values[i] - p.values[i];
  RieszMap riesz{&mass_, nullptr, linear_solver_};
  return {mesh_, riesz.gradient(mass_.apply(density))};
}

double ControlProblem::cost(const ScalarField& u, const ScalarField& y) const {
  const FunctionalTerm terms[] = {FunctionalTerm::tracking(y, desired_state_),
                                  FunctionalTerm::tikhonov(u, alpha_)};
  return integrate_functional(*mesh_, terms);
}

ScalarField ControlProblem::hessian_action(const ScalarField& v) const {
  if (static_cast<int>(v.values.size()) != mesh_->num_vertices())
    throw std::invalid_argument("hessian_action: field does not match mesh");
  // The action is divided by alpha wherever it feeds a Newton-type solve, so
  // the forward solves run at a purely relative tolerance well below the
  // default; an absolute floor would cut off the small directions of the
  // inner CG.
  SolverSettings tight = linear_solver_;
  tight.rtol = std::min(tight.rtol, 1e-14);
  tight.atol = 0.0;
  const ScalarField dy = solve_with_load(mass_.apply(v.values), &tight);
  std::vector<double> load = mass_.apply(dy.values);
  for (double& w : load) w = -w;
  const ScalarField dp = solve_with_load(std::move(load), &tight);
  ScalarField out(mesh_);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = alpha_ * v.values[i] - dp.values[i];
  return out;
}

ControlProblem make_benchmark_control_problem(int n) {
  auto mesh = std::make_shared<const TriangleMesh>(unit_square_mesh(n));
  ScalarField y_d = interpolate(mesh, [](double x1, double x2) {
    return x1 * x1 * (1.0 - x1) * x2 * x2 * (1.0 - x2);
  });
  return ControlProblem(mesh, 1e-4, std::move(y_d));
}

ScalarField project_box(const ScalarField& u, const ScalarField& lower,
                        const ScalarField& upper) {
  ScalarField out = u;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::max(lower.values[i], std::min(out.values[i], upper.values[i]));
  return out;
}

namespace {

/// Shared L² machinery for one optimization run.
struct ControlWorkspace {
  const ControlProblem& problem;
  std::vector<double> mass_buffer;

  explicit ControlWorkspace(const ControlProblem& p)
      : problem(p), mass_buffer(p.mesh()->num_vertices()) {}

  double mass_dot(std::span<const double> a, std::span<const double> b) {
    problem.mass().multiply(a, mass_buffer);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += mass_buffer[i] * b[i];
    return s;
  }

  DotFn dot_fn() {
    return [this](std::span<const double> a, std::span<const double> b) {
      return mass_dot(a, b);
    };
  }

  std::function<std::vector<double>(const std::vector<double>&)> clamp_fn() const {
    if (!problem.bounds().has_value()) return {};
    return [this](const std::vector<double>& v) {
      const auto& box = *problem.bounds();
      std::vector<double> out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = std::max(box.lower.values[i], std::min(v[i], box.upper.values[i]));
      return out;
    };
  }

  /// L² norm of the gradient, or of u - P(u - g) under bounds.
  double stationarity(const ScalarField& u, const ScalarField& g) {
    if (!problem.bounds().has_value()) return std::sqrt(mass_dot(g.values, g.values));
    const auto& box = *problem.bounds();
    std::vector<double> w(u.values.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double stepped = u.values[i] - g.values[i];
      w[i] = u.values[i] -
             std::max(box.lower.values[i], std::min(stepped, box.upper.values[i]));
    }
    return std::sqrt(mass_dot(w, w));
  }
};

ControlSolution optimize_pdas(const ControlProblem& problem, const OptimizerConfig& config,
                              ScalarField u);

}  // namespace

LineSearchOutcome armijo_line_search(const ControlProblem& problem, const ScalarField& u,
                                     const ScalarField& direction, const ScalarField& gradient,
                                     double t_init, double epsilon) {
  ControlWorkspace ws(problem);
  ScalarField y = problem.solve_state(u);
  ScalarField trial_state;
  auto cost = [&](const std::vector<double>& trial) -> std::optional<double> {
    ScalarField trial_u{problem.mesh(), trial};
    trial_state = problem.solve_state(trial_u);
    return problem.cost(trial_u, trial_state);
  };
  const ArmijoResult result =
      armijo_backtrack(cost, ws.dot_fn(), u.values, direction.values, gradient.values,
                       problem.cost(u, y), t_init, epsilon, ws.clamp_fn());
  if (!result.accepted)
    throw LineSearchFailure("armijo_line_search: no acceptable step within 30 halvings");
  return {result.step, ScalarField{problem.mesh(), result.point}, std::move(trial_state),
          result.cost};
}

ControlSolution optimize(const ControlProblem& problem, const OptimizerConfig& config,
                         const ScalarField* u0) {
  config.validate();
  ScalarField u = u0 ? *u0 : ScalarField(problem.mesh());
  if (u0 && static_cast<int>(u0->values.size()) != problem.mesh()->num_vertices())
    throw std::invalid_argument("optimize: initial control does not match mesh");
  if (config.algorithm == Algorithm::pdas) return optimize_pdas(problem, config, std::move(u));

  ControlWorkspace ws(problem);
  const DotFn dot = ws.dot_fn();
  const auto clamp = ws.clamp_fn();
  if (clamp) u.values = clamp(u.values);

  ControlSolution result;
  result.history.termination = Termination::max_iterations;

  ScalarField y = problem.solve_state(u);
  double cost = problem.cost(u, y);
  ScalarField p = problem.solve_adjoint(y);
  ScalarField g = problem.compute_gradient(u, y, p);
  double stat = ws.stationarity(u, g);
  const double stat0 = stat;
  const double tolerance = config.atol + config.rtol * stat0;

  SearchDirection engine(config.algorithm, config.ncg_variant, config.lbfgs_memory);
  double t_init = 1.0;

  if (stat <= tolerance) {
    result.history.termination = Termination::converged;
  } else {
    for (int k = 1; k <= config.maximum_iterations; ++k) {
      std::vector<double> d;
      if (config.algorithm == Algorithm::newton) {
        // Inner CG on H d = -g to a true relative residual of 1e-10. The
        // Hessian actions carry the forward solvers' noise amplified by
        // 1/alpha, which the recursive CG residual cannot see, so the solve
        // is restarted on freshly evaluated residuals until the target holds.
        const int n = problem.mesh()->num_vertices();
        auto apply = [&](const std::vector<double>& v) {
          return problem.hessian_action(ScalarField{problem.mesh(), v}).values;
        };
        std::vector<double> minus_g(g.values.size());
        for (std::size_t i = 0; i < minus_g.size(); ++i) minus_g[i] = -g.values[i];
        const double target = 0.2 * 1e-10 * std::sqrt(dot(minus_g, minus_g));
        d.assign(n, 0.0);
        std::vector<double> residual = minus_g;
        for (int sweep = 0; sweep < 5; ++sweep) {
          if (std::sqrt(dot(residual, residual)) <= target) break;
          const std::vector<double> correction =
              operator_cg(n, apply, dot, residual, 1e-5, 800);
          for (int i = 0; i < n; ++i) d[i] += correction[i];
          const std::vector<double> hd = apply(d);
          for (int i = 0; i < n; ++i) residual[i] = minus_g[i] - hd[i];
        }
      } else {
        d = engine.next(g.values, dot);
      }

      ScalarField trial_state;
      auto trial_cost = [&](const std::vector<double>& trial) -> std::optional<double> {
        ScalarField trial_u{problem.mesh(), trial};
        trial_state = problem.solve_state(trial_u);
        return problem.cost(trial_u, trial_state);
      };
      const ArmijoResult ls = armijo_backtrack(trial_cost, dot, u.values, d, g.values, cost,
                                               t_init, config.armijo_epsilon, clamp);
      if (!ls.accepted) {
        result.history.termination = Termination::line_search_failure;
        break;
      }

      ScalarField u_new{problem.mesh(), ls.point};
      y = std::move(trial_state);
      cost = ls.cost;
      p = problem.solve_adjoint(y);
      ScalarField g_new = problem.compute_gradient(u_new, y, p);
      if (config.algorithm == Algorithm::lbfgs)
        engine.push_curvature_pair(subtract(u_new.values, u.values),
                                   subtract(g_new.values, g.values), dot);
      u = std::move(u_new);
      g = std::move(g_new);
      stat = ws.stationarity(u, g);
      result.history.rows.push_back({k, cost, stat, ls.step});
      const bool unit_scaled = config.algorithm == Algorithm::newton ||
                               (config.algorithm == Algorithm::lbfgs && engine.has_curvature());
      t_init = unit_scaled ? 1.0 : config.armijo_beta * ls.step;

      if (stat <= tolerance) {
        result.history.termination = Termination::converged;
        break;
      }
    }
  }

  result.control = std::move(u);
  result.state = std::move(y);
  return result;
}

namespace {

ControlSolution optimize_pdas(const ControlProblem& problem, const OptimizerConfig& config,
                              ScalarField u) {
  if (!problem.bounds().has_value())
    throw std::invalid_argument("optimize: pdas requires box bounds");
  const auto& box = *problem.bounds();
  const double c = config.pdas_c;
  const int n = problem.mesh()->num_vertices();
  ControlWorkspace ws(problem);

  // Affine structure of the reduced gradient: grad j(u) = H u - p0 with
  // p0 the adjoint state of y = 0.
  const ScalarField p0 = problem.solve_adjoint(ScalarField(problem.mesh()));
  const std::vector<double> m_p0 = problem.mass().apply(p0.values);

  ControlSolution result;
  result.history.termination = Termination::max_iterations;
  u = project_box(u, box.lower, box.upper);

  std::vector<char> prev_active_upper, prev_active_lower;
  ScalarField y = problem.solve_state(u);

  for (int k = 1; k <= config.maximum_iterations; ++k) {
    const ScalarField p = problem.solve_adjoint(y);
    // Multipliers of the discrete KKT system: mu = -grad j_h(u) with the
    // euclidean (mass-weighted) gradient. The pointwise density alpha*u - p
    // looks equivalent but its active-set updates can cycle between two
    // configurations near the free boundary.
    std::vector<double> density(n);
    for (int i = 0; i < n; ++i) density[i] = problem.alpha() * u.values[i] - p.values[i];
    const std::vector<double> grad = problem.mass().apply(density);
    std::vector<char> active_upper(n, 0), active_lower(n, 0);
    for (int i = 0; i < n; ++i) {
      const double multiplier = -grad[i];
      if (multiplier + c * (u.values[i] - box.upper.values[i]) > 0.0) active_upper[i] = 1;
      else if (multiplier + c * (u.values[i] - box.lower.values[i]) < 0.0) active_lower[i] = 1;
    }
    if (k > 1 && active_upper == prev_active_upper && active_lower == prev_active_lower) {
      result.history.termination = Termination::converged;
      break;
    }
    prev_active_upper = active_upper;
    prev_active_lower = active_lower;

    // Fix the active dofs at their bounds and solve the reduced optimality
    // system (M grad j(u))_I = 0 on the inactive set by CG on M H.
    std::vector<double> fixed(n, 0.0);
    std::vector<int> inactive;
    for (int i = 0; i < n; ++i) {
      if (active_upper[i]) fixed[i] = box.upper.values[i];
      else if (active_lower[i]) fixed[i] = box.lower.values[i];
      else inactive.push_back(i);
    }

    std::vector<double> u_next = fixed;
    if (!inactive.empty()) {
      const std::vector<double> mh_fixed =
          problem.mass().apply(problem.hessian_action({problem.mesh(), fixed}).values);
      std::vector<double> rhs(inactive.size());
      for (std::size_t idx = 0; idx < inactive.size(); ++idx)
        rhs[idx] = m_p0[inactive[idx]] - mh_fixed[inactive[idx]];

      auto apply_reduced = [&](const std::vector<double>& v) {
        std::vector<double> full(n, 0.0);
        for (std::size_t idx = 0; idx < inactive.size(); ++idx) full[inactive[idx]] = v[idx];
        const std::vector<double> mh =
            problem.mass().apply(problem.hessian_action({problem.mesh(), full}).values);
        std::vector<double> out(inactive.size());
        for (std::size_t idx = 0; idx < inactive.size(); ++idx) out[idx] = mh[inactive[idx]];
        return out;
      };
      auto euclid = [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
      };
      const std::vector<double> u_inactive =
          operator_cg(static_cast<int>(inactive.size()), apply_reduced, euclid, rhs, 1e-12, 2000);
      for (std::size_t idx = 0; idx < inactive.size(); ++idx)
        u_next[inactive[idx]] = u_inactive[idx];
    }

    u = ScalarField{problem.mesh(), std::move(u_next)};
    y = problem.solve_state(u);
    const ScalarField p_new = problem.solve_adjoint(y);
    const ScalarField g = problem.compute_gradient(u, y, p_new);
    result.history.rows.push_back(
        {k, problem.cost(u, y), ws.stationarity(u, g), 1.0});
  }

  result.control = std::move(u);
  result.state = std::move(y);
  return result;
}

}  // namespace

}  // namespace pdeopt
