#include "pdeopt/shape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace pdeopt {

void ShapeProblem::validate() const {
  if (!initial_mesh) throw std::invalid_argument("ShapeProblem: missing initial mesh");
  if (!source || !source_gradient)
    throw std::invalid_argument("ShapeProblem: missing source or source gradient");
  if (!(mu > 0.0)) throw std::invalid_argument("ShapeProblem: mu must be positive");
  if (lambda < 0.0 || delta < 0.0)
    throw std::invalid_argument("ShapeProblem: lambda and delta must be >= 0");
  for (int m : bdry_fix)
    if (std::find(bdry_def.begin(), bdry_def.end(), m) != bdry_def.end())
      throw std::invalid_argument("ShapeProblem: marker both deformable and fixed");
  const auto markers = initial_mesh->facet_markers();
  for (int m : markers) {
    const bool in_def = std::find(bdry_def.begin(), bdry_def.end(), m) != bdry_def.end();
    const bool in_fix = std::find(bdry_fix.begin(), bdry_fix.end(), m) != bdry_fix.end();
    if (!in_def && !in_fix)
      throw std::invalid_argument("ShapeProblem: marker " + std::to_string(m) +
                                  " neither deformable nor fixed");
  }
}

ShapeProblem make_benchmark_shape_problem(int n) {
  ShapeProblem problem;
  problem.initial_mesh = std::make_shared<const TriangleMesh>(unit_disc_mesh(n));
  problem.source = [](double x1, double x2) {
    const double g = x1 + 0.4 - x2 * x2;
    return 2.5 * g * g + x1 * x1 + x2 * x2 - 1.0;
  };
  problem.source_gradient = [](double x1, double x2) -> std::array<double, 2> {
    const double g = x1 + 0.4 - x2 * x2;
    return {5.0 * g + 2.0 * x1, -10.0 * x2 * g + 2.0 * x2};
  };
  return problem;
}

std::vector<std::vector<double>> rigid_modes(const TriangleMesh& mesh) {
  const int n = mesh.num_vertices();
  std::vector<std::vector<double>> modes(3, std::vector<double>(2 * n, 0.0));
  for (int v = 0; v < n; ++v) {
    modes[0][2 * v] = 1.0;
    modes[1][2 * v + 1] = 1.0;
    modes[2][2 * v] = -mesh.vertices[v][1];
    modes[2][2 * v + 1] = mesh.vertices[v][0];
  }
  return modes;
}

namespace {

/// Everything the loop needs on one mesh.
struct MeshOps {
  MeshPtr mesh;
  SparseMatrix stiffness_bc;
  SparseMatrix mass;
  ScalarField f;
};

MeshOps build_ops(MeshPtr mesh, const ShapeProblem& problem,
                  std::span<const int> state_boundary) {
  MeshOps ops;
  ops.mesh = std::move(mesh);
  SparseMatrix stiffness = assemble_stiffness(*ops.mesh);
  stiffness.eliminate_symmetric(state_boundary);
  ops.stiffness_bc = std::move(stiffness);
  ops.mass = assemble_mass(*ops.mesh);
  ops.f = interpolate(ops.mesh, problem.source);
  return ops;
}

ScalarField state_from_ops(const MeshOps& ops, const ShapeProblem& problem,
                           std::span<const int> state_boundary,
                           std::span<const double> warm_start = {}) {
  std::vector<double> load = ops.mass.apply(ops.f.values);
  for (int dof : state_boundary) load[dof] = 0.0;
  return {ops.mesh, cg_solve(ops.stiffness_bc, load, problem.linear_solver, nullptr,
                             warm_start)};
}

ScalarField adjoint_from_ops(const MeshOps& ops, const ShapeProblem& problem,
                             std::span<const int> state_boundary,
                             std::span<const double> warm_start = {}) {
  const std::vector<double> ones(ops.mesh->num_vertices(), 1.0);
  std::vector<double> load = ops.mass.apply(ones);
  for (double& v : load) v = -v;
  for (int dof : state_boundary) load[dof] = 0.0;
  return {ops.mesh, cg_solve(ops.stiffness_bc, load, problem.linear_solver, nullptr,
                             warm_start)};
}

double volume_cost(const MeshOps& ops, const ScalarField& y) {
  const FunctionalTerm terms[] = {FunctionalTerm::linear(y, 1.0)};
  return integrate_functional(*ops.mesh, terms);
}

std::vector<int> state_boundary_dofs(const TriangleMesh& mesh, const DirichletBC& bc) {
  return mesh.boundary_vertices(bc.markers);
}

}  // namespace

ScalarField solve_state_shape(const MeshPtr& mesh, const ShapeProblem& problem) {
  const auto boundary = state_boundary_dofs(*mesh, problem.bc);
  const MeshOps ops = build_ops(mesh, problem, boundary);
  return state_from_ops(ops, problem, boundary);
}

ScalarField solve_adjoint_shape(const MeshPtr& mesh, const ShapeProblem& problem) {
  const auto boundary = state_boundary_dofs(*mesh, problem.bc);
  const MeshOps ops = build_ops(mesh, problem, boundary);
  return adjoint_from_ops(ops, problem, boundary);
}

std::vector<double> assemble_shape_derivative(const TriangleMesh& mesh, const ScalarField& y,
                                              const ScalarField& p,
                                              const ShapeProblem& problem) {
  const int n = mesh.num_vertices();
  if (static_cast<int>(y.values.size()) != n || static_cast<int>(p.values.size()) != n)
    throw std::invalid_argument("assemble_shape_derivative: fields do not match mesh");
  std::vector<double> d(2 * n, 0.0);

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(mesh, c);
    if (!(geom.area > 0.0))
      throw std::runtime_error("assemble_shape_derivative: inverted cell");
    const auto& cell = mesh.cells[c];

    std::array<double, 3> yv, pv, fv;
    double gy0 = 0.0, gy1 = 0.0, gp0 = 0.0, gp1 = 0.0;
    for (int i = 0; i < 3; ++i) {
      yv[i] = y.values[cell[i]];
      pv[i] = p.values[cell[i]];
      const auto& vx = mesh.vertices[cell[i]];
      fv[i] = problem.source(vx[0], vx[1]);
      gy0 += yv[i] * geom.grad[i][0];
      gy1 += yv[i] * geom.grad[i][1];
      gp0 += pv[i] * geom.grad[i][0];
      gp1 += pv[i] * geom.grad[i][1];
    }
    const double grad_pair = gy0 * gp0 + gy1 * gp1;
    const double y_mean = (yv[0] + yv[1] + yv[2]) / 3.0;
    const double sum_f = fv[0] + fv[1] + fv[2];
    const double sum_p = pv[0] + pv[1] + pv[2];
    double fp = 0.0;  // f' M_cell p with M_cell = area/12 (ones + I)
    for (int i = 0; i < 3; ++i) fp += fv[i] * pv[i];
    fp = geom.area / 12.0 * (sum_f * sum_p + fp);
    const double div_weight = geom.area * (y_mean + grad_pair) - fp;

    for (int v = 0; v < 3; ++v) {
      const double gv0 = geom.grad[v][0];
      const double gv1 = geom.grad[v][1];
      const double gv_dot_gy = gv0 * gy0 + gv1 * gy1;
      const double gv_dot_gp = gv0 * gp0 + gv1 * gp1;
      const auto& vx = mesh.vertices[cell[v]];
      const auto grad_f = problem.source_gradient(vx[0], vx[1]);
      const double mp = geom.area / 12.0 * (sum_p + pv[v]);  // (M_cell p)_v
      for (int comp = 0; comp < 2; ++comp) {
        const double gy_c = comp == 0 ? gy0 : gy1;
        const double gp_c = comp == 0 ? gp0 : gp1;
        double value = (comp == 0 ? gv0 : gv1) * div_weight;
        value -= geom.area * (gv_dot_gy * gp_c + gy_c * gv_dot_gp);
        value -= mp * grad_f[comp];
        d[2 * cell[v] + comp] += value;
      }
    }
  }
  return d;
}

namespace {

// Riesz machinery of the elasticity scalar product. When the form is
// singular (no fixed boundary, delta = 0) the metric is completed on the
// rigid modes with the vector-mass product: the complement part solves the
// projected system, the rigid part gets its L² Riesz representative. The
// completed product is what `dot` evaluates, so directions, curvature pairs
// and the stopping norm all live in one SPD metric.
struct ElasticityRiesz {
  SparseMatrix matrix;
  std::unique_ptr<KernelSpace> kernel;
  std::unique_ptr<SparseMatrix> metric;  // vector mass, kernel case only

  std::vector<double> solve(std::vector<double> dual, const ShapeProblem& problem,
                            std::span<const double> warm_start = {}) const {
    if (!kernel) return cg_solve(matrix, dual, problem.linear_solver, nullptr, warm_start);
    const std::vector<double> dual_full = dual;
    std::vector<double> g = cg_solve(matrix, dual, problem.linear_solver, kernel.get(),
                                     warm_start);
    for (std::size_t i = 0; i < kernel->basis().size(); ++i) {
      const auto& q = kernel->basis()[i];
      double coeff = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) coeff += q[k] * dual_full[k];
      for (std::size_t k = 0; k < q.size(); ++k) g[k] += coeff * q[k];
    }
    return g;
  }

  double dot(std::span<const double> a, std::span<const double> b) const {
    std::vector<double> ma(matrix.dim());
    matrix.multiply(a, ma);
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) s += ma[i] * b[i];
    if (kernel) {
      for (const auto& mq : kernel->metric_basis()) {
        double pa = 0.0, pb = 0.0;
        for (std::size_t i = 0; i < mq.size(); ++i) {
          pa += mq[i] * a[i];
          pb += mq[i] * b[i];
        }
        s += pa * pb;
      }
    }
    return s;
  }
};

ElasticityRiesz build_riesz(const TriangleMesh& mesh, const ShapeProblem& problem) {
  ElasticityRiesz riesz;
  riesz.matrix = assemble_elasticity(mesh, problem.mu, problem.lambda, problem.delta);
  if (!problem.bdry_fix.empty()) {
    std::vector<double> dummy(2 * mesh.num_vertices(), 0.0);
    auto [constrained, rhs] = apply_dirichlet(riesz.matrix, std::move(dummy),
                                              DirichletBC{problem.bdry_fix, 0.0}, mesh, 2);
    riesz.matrix = std::move(constrained);
  } else if (problem.delta == 0.0) {
    riesz.metric = std::make_unique<SparseMatrix>(assemble_vector_mass(mesh));
    riesz.kernel =
        std::make_unique<KernelSpace>(KernelSpace::build(rigid_modes(mesh), *riesz.metric));
  }
  return riesz;
}

std::vector<double> zero_fixed_dofs(std::vector<double> dual, const TriangleMesh& mesh,
                                    const ShapeProblem& problem) {
  if (problem.bdry_fix.empty()) return dual;
  for (int v : mesh.boundary_vertices(problem.bdry_fix)) {
    dual[2 * v] = 0.0;
    dual[2 * v + 1] = 0.0;
  }
  return dual;
}

}  // namespace

VectorField compute_shape_gradient(const TriangleMesh& mesh, std::span<const double> derivative,
                                   const ShapeProblem& problem) {
  if (derivative.size() != 2 * static_cast<std::size_t>(mesh.num_vertices()))
    throw std::invalid_argument("compute_shape_gradient: derivative size mismatch");
  const ElasticityRiesz riesz = build_riesz(mesh, problem);
  std::vector<double> dual =
      zero_fixed_dofs({derivative.begin(), derivative.end()}, mesh, problem);
  auto mesh_copy = std::make_shared<const TriangleMesh>(mesh);
  return {mesh_copy, riesz.solve(std::move(dual), problem)};
}

ShapeSolution optimize_shape(const ShapeProblem& problem, const OptimizerConfig& config,
                             const ShapeObserver& observer) {
  problem.validate();
  config.validate();
  if (config.algorithm != Algorithm::gd && config.algorithm != Algorithm::ncg &&
      config.algorithm != Algorithm::lbfgs)
    throw std::invalid_argument(
        "optimize_shape: only gd, ncg, and lbfgs handle shape problems");

  const auto state_boundary = state_boundary_dofs(*problem.initial_mesh, problem.bc);
  const double initial_ratio = quality_report(*problem.initial_mesh).min_radius_ratio;
  const double ratio_floor = problem.quality_gate_factor * initial_ratio;

  ShapeSolution result;
  result.history.termination = Termination::max_iterations;
  result.worst_radius_ratio = initial_ratio;

  MeshOps ops = build_ops(problem.initial_mesh, problem, state_boundary);
  ScalarField y = state_from_ops(ops, problem, state_boundary);
  double cost = volume_cost(ops, y);
  if (observer) observer(0, *ops.mesh, y);

  auto flatten = [](const TriangleMesh& mesh) {
    std::vector<double> coords(2 * mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      coords[2 * v] = mesh.vertices[v][0];
      coords[2 * v + 1] = mesh.vertices[v][1];
    }
    return coords;
  };
  auto rebuild = [&](const std::vector<double>& coords) {
    TriangleMesh mesh = *ops.mesh;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
      mesh.vertices[v] = {coords[2 * v], coords[2 * v + 1]};
    return mesh;
  };

  SearchDirection engine(config.algorithm, config.ncg_variant, config.lbfgs_memory);
  std::vector<double> prev_gradient;
  double t_init = 1.0;

  ElasticityRiesz riesz = build_riesz(*ops.mesh, problem);
  ScalarField p = adjoint_from_ops(ops, problem, state_boundary);
  std::vector<double> gradient = riesz.solve(
      zero_fixed_dofs(assemble_shape_derivative(*ops.mesh, y, p, problem), *ops.mesh, problem),
      problem);

  // Scalar product of the current metric; `riesz` is rebuilt per iterate, so
  // history vectors get paired through the matrix of the current mesh.
  const DotFn dot = [&riesz](std::span<const double> a, std::span<const double> b) {
    return riesz.dot(a, b);
  };

  double stat = std::sqrt(std::max(0.0, dot(gradient, gradient)));
  const double stat0 = stat;
  const double tolerance = config.atol + config.rtol * stat0;

  if (stat <= tolerance) {
    result.history.termination = Termination::converged;
  } else {
    for (int k = 1; k <= config.maximum_iterations; ++k) {
      const std::vector<double> d = engine.next(gradient, dot);

      // Trial evaluation: deform, gate on quality, solve the state.
      MeshOps trial_ops;
      ScalarField trial_y;
      auto trial_cost = [&](const std::vector<double>& coords) -> std::optional<double> {
        TriangleMesh trial_mesh = rebuild(coords);
        const MeshQualityReport quality = quality_report(trial_mesh);
        if (quality.num_inverted > 0 || quality.min_radius_ratio < ratio_floor)
          return std::nullopt;
        trial_ops = build_ops(std::make_shared<const TriangleMesh>(std::move(trial_mesh)),
                              problem, state_boundary);
        trial_y = state_from_ops(trial_ops, problem, state_boundary, y.values);
        return volume_cost(trial_ops, trial_y);
      };

      const std::vector<double> coords = flatten(*ops.mesh);
      const ArmijoResult ls = armijo_backtrack(trial_cost, dot, coords, d, gradient, cost,
                                               t_init, config.armijo_epsilon);
      if (!ls.accepted) {
        result.history.termination = Termination::line_search_failure;
        break;
      }

      ops = std::move(trial_ops);
      y = std::move(trial_y);
      cost = ls.cost;
      const MeshQualityReport quality = quality_report(*ops.mesh);
      result.worst_radius_ratio = std::min(result.worst_radius_ratio, quality.min_radius_ratio);
      result.worst_inverted = std::max(result.worst_inverted, quality.num_inverted);

      riesz = build_riesz(*ops.mesh, problem);
      p = adjoint_from_ops(ops, problem, state_boundary, p.values);
      prev_gradient = gradient;
      gradient = riesz.solve(
          zero_fixed_dofs(assemble_shape_derivative(*ops.mesh, y, p, problem), *ops.mesh,
                          problem),
          problem, gradient);

      if (config.algorithm == Algorithm::lbfgs) {
        std::vector<double> step(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) step[i] = ls.step * d[i];
        std::vector<double> change(gradient.size());
        for (std::size_t i = 0; i < gradient.size(); ++i)
          change[i] = gradient[i] - prev_gradient[i];
        engine.push_curvature_pair(std::move(step), std::move(change), dot);
      }

      stat = std::sqrt(std::max(0.0, dot(gradient, gradient)));
      result.history.rows.push_back({k, cost, stat, ls.step});
      // Deformation steps live on the mesh scale: growing trials past the
      // unit step lets Armijo accept large low-quality deformations, so the
      // doubled step is capped at 1.
      // Deformation steps live on the unit scale of the Riesz gradient;
      // growing the trial past 1 lets Armijo accept large mesh-degrading
      // moves, so the doubled step is capped there.
      t_init = config.algorithm == Algorithm::lbfgs && engine.has_curvature()
                   ? 1.0
                   : std::min(1.0, config.armijo_beta * ls.step);
      if (observer) observer(k, *ops.mesh, y);

      if (stat <= tolerance) {
        result.history.termination = Termination::converged;
        break;
      }
    }
  }

  result.mesh = ops.mesh;
  result.state = std::move(y);
  result.cost = cost;
  return result;
}

}  // namespace pdeopt
