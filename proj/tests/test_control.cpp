#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pdeopt/control.hpp"

#include "oracles.hpp"

using namespace pdeopt;

namespace {

ScalarField random_field(const MeshPtr& mesh, unsigned seed, double amplitude = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uniform(-amplitude, amplitude);
  ScalarField f(mesh);
  for (double& v : f.values) v = uniform(rng);
  return f;
}

double mass_dot(const ControlProblem& pb, const std::vector<double>& a,
                const std::vector<double>& b) {
  const std::vector<double> ma = pb.mass().apply(a);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += ma[i] * b[i];
  return s;
}

double mass_norm(const ControlProblem& pb, const std::vector<double>& a) {
  return std::sqrt(mass_dot(pb, a, a));
}

// Truncated double sine series for -Δy = 1 on the unit square, evaluated at
// the center; the oracle for the max of the u = 1 state.
double poisson_unit_source_center() {
  double value = 0.0;
  const double pi = std::numbers::pi;
  for (int k = 1; k <= 199; k += 2)
    for (int l = 1; l <= 199; l += 2) {
      const double coeff = 16.0 / (pi * pi * pi * pi * k * l * (k * k + l * l));
      const double sign = ((k - 1) / 2 + (l - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
      value += coeff * sign;
    }
  return value;
}

double reduced_cost(const ControlProblem& pb, const ScalarField& u) {
  return pb.cost(u, pb.solve_state(u));
}

// Least-squares slope of log r against log t.
double fitted_order(const std::vector<double>& ts, const std::vector<double>& rs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(ts.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(ts[i]);
    const double y = std::log(rs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("state solve: trivial control, manufactured rate, series oracle") {
  const ControlProblem pb = make_benchmark_control_problem(16);
  const ScalarField zero(pb.mesh());
  for (double v : pb.solve_state(zero).values) CHECK(v == 0.0);

  // manufactured solution u = 2 pi^2 sin(pi x) sin(pi y)
  const double pi = std::numbers::pi;
  std::vector<double> errors;
  for (int n : {16, 32}) {
    const ControlProblem p = make_benchmark_control_problem(n);
    const ScalarField u = interpolate(p.mesh(), [pi](double x, double y) {
      return 2.0 * pi * pi * std::sin(pi * x) * std::sin(pi * y);
    });
    const ScalarField y = p.solve_state(u);
    const ScalarField exact = interpolate(p.mesh(), [pi](double x, double yy) {
      return std::sin(pi * x) * std::sin(pi * yy);
    });
    std::vector<double> diff(y.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = y.values[i] - exact.values[i];
    errors.push_back(mass_norm(p, diff));
  }
  CHECK(errors[0] / errors[1] > 3.4);
  CHECK(errors[0] / errors[1] < 4.6);

  const ControlProblem p64 = make_benchmark_control_problem(64);
  const ScalarField ones(p64.mesh(), 1.0);
  const ScalarField y = p64.solve_state(ones);
  double max_y = 0.0;
  for (double v : y.values) max_y = std::max(max_y, v);
  CHECK(std::abs(max_y - poisson_unit_source_center()) < 2e-3);
}

TEST_CASE("adjoint solve: zero residual at the target and discrete identity") {
  const ControlProblem pb = make_benchmark_control_problem(16);
  const ScalarField p_at_target = pb.solve_adjoint(pb.desired_state());
  for (double v : p_at_target.values) CHECK(std::abs(v) < 1e-13);

  // interior rows of K p + M (y - y_d) vanish
  const ScalarField y = random_field(pb.mesh(), 4);
  const ScalarField p = pb.solve_adjoint(y);
  const std::vector<double> kp = pb.stiffness().apply(p.values);
  std::vector<double> diff(y.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = y.values[i] - pb.desired_state().values[i];
  const std::vector<double> mdiff = pb.mass().apply(diff);
  std::vector<char> on_boundary(pb.mesh()->num_vertices(), 0);
  for (int v : pb.boundary_dofs()) on_boundary[v] = 1;
  for (int i = 0; i < pb.mesh()->num_vertices(); ++i)
    if (!on_boundary[i]) CHECK(std::abs(kp[i] + mdiff[i]) < 1e-10);
}

TEST_CASE("gradient: closed forms and the Taylor remainder test") {
  const ControlProblem pb = make_benchmark_control_problem(16);

  // p = alpha u makes the gradient density vanish
  const ScalarField u = random_field(pb.mesh(), 7);
  ScalarField p_matched(pb.mesh());
  for (std::size_t i = 0; i < u.values.size(); ++i)
    p_matched.values[i] = pb.alpha() * u.values[i];
  const ScalarField g0 = pb.compute_gradient(u, ScalarField(pb.mesh()), p_matched);
  for (double v : g0.values) CHECK(std::abs(v) < 1e-10);

  const ScalarField g1 =
      pb.compute_gradient(ScalarField(pb.mesh()), ScalarField(pb.mesh()),
                          ScalarField(pb.mesh(), 1.0));
  for (double v : g1.values) CHECK(v == doctest::Approx(-1.0).epsilon(1e-10));

  // Taylor remainder r(t) = |j(u+tv) - j(u) - t<g,v>| decays second order
  for (unsigned seed : {11u, 12u}) {
    const ScalarField base = random_field(pb.mesh(), seed);
    ScalarField v = random_field(pb.mesh(), seed + 100);
    const double norm = mass_norm(pb, v.values);
    for (double& x : v.values) x /= norm;

    const ScalarField y = pb.solve_state(base);
    const ScalarField p = pb.solve_adjoint(y);
    const ScalarField g = pb.compute_gradient(base, y, p);
    const double j0 = pb.cost(base, y);
    const double slope_term = mass_dot(pb, g.values, v.values);

    std::vector<double> ts = {1e-2, 1e-3, 1e-4};
    std::vector<double> rs;
    for (double t : ts) {
      ScalarField ut = base;
      for (std::size_t i = 0; i < ut.values.size(); ++i) ut.values[i] += t * v.values[i];
      rs.push_back(std::abs(reduced_cost(pb, ut) - j0 - t * slope_term));
    }
    CHECK(fitted_order(ts, rs) > 1.9);
  }
}

TEST_CASE("riesz norm on the mass metric") {
  const ControlProblem pb = make_benchmark_control_problem(8);
  const std::vector<double> zero(pb.mesh()->num_vertices(), 0.0);
  CHECK(riesz_norm(zero, pb.mass()) == 0.0);

  const std::vector<double> ones(pb.mesh()->num_vertices(), 1.0);
  CHECK(riesz_norm(ones, pb.mass()) == doctest::Approx(1.0).epsilon(1e-12));

  const ScalarField x1 = interpolate(pb.mesh(), [](double a, double) { return a; });
  CHECK(riesz_norm(x1.values, pb.mass()) ==
        doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-3));
}

TEST_CASE("armijo line search: quadratic surrogate, benchmark descent, precondition") {
  // 1-d surrogate j(u) = u^2/2 from u=1 along d=-1 accepts the full step
  auto quadratic = [](const std::vector<double>& u) -> std::optional<double> {
    return 0.5 * u[0] * u[0];
  };
  auto dot1 = [](std::span<const double> a, std::span<const double> b) {
    return a[0] * b[0];
  };
  const ArmijoResult r =
      armijo_backtrack(quadratic, dot1, {1.0}, {-1.0}, {1.0}, 0.5, 1.0, 1e-4);
  CHECK(r.accepted);
  CHECK(r.step == 1.0);
  CHECK(r.point[0] == 0.0);

  const ControlProblem pb = make_benchmark_control_problem(8);
  const ScalarField u0(pb.mesh());
  const ScalarField y0 = pb.solve_state(u0);
  const ScalarField p0 = pb.solve_adjoint(y0);
  const ScalarField g = pb.compute_gradient(u0, y0, p0);
  ScalarField d(pb.mesh());
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = -g.values[i];
  const LineSearchOutcome out = armijo_line_search(pb, u0, d, g, 1.0);
  CHECK(out.cost < pb.cost(u0, y0));
  CHECK(out.step > 0.0);

  CHECK_THROWS_AS(armijo_line_search(pb, u0, g, g, 1.0), std::invalid_argument);
}

TEST_CASE("project_box: clamp and idempotence") {
  const auto mesh = std::make_shared<const TriangleMesh>(unit_square_mesh(4));
  const ScalarField lower(mesh, -1.0), upper(mesh, 5.0);
  const ScalarField inside(mesh, 2.0);
  CHECK(project_box(inside, lower, upper).values == inside.values);

  const ScalarField big(mesh, 10.0);
  for (double v : project_box(big, lower, upper).values) CHECK(v == 5.0);

  const ScalarField wild = random_field(mesh, 3, 10.0);
  const ScalarField once = project_box(wild, lower, upper);
  CHECK(project_box(once, lower, upper).values == once.values);
}

TEST_CASE("hessian action: symmetry and finite-difference consistency") {
  ControlProblem pb = make_benchmark_control_problem(16);
  SolverSettings tight;
  tight.rtol = 1e-14;
  tight.atol = 0.0;
  pb.set_linear_solver(tight);

  const ScalarField zero(pb.mesh());
  for (double v : pb.hessian_action(zero).values) CHECK(v == 0.0);

  const ScalarField v = random_field(pb.mesh(), 21);
  const ScalarField w = random_field(pb.mesh(), 22);
  const ScalarField hv = pb.hessian_action(v);
  const ScalarField hw = pb.hessian_action(w);
  CHECK(std::abs(mass_dot(pb, hv.values, w.values) - mass_dot(pb, v.values, hw.values)) <=
        1e-10);

  // grad j is affine, so the FD quotient matches the action up to solver noise
  const ScalarField u = random_field(pb.mesh(), 23);
  const double t = 1e-5;
  auto gradient_at = [&](const ScalarField& point) {
    const ScalarField y = pb.solve_state(point);
    return pb.compute_gradient(point, y, pb.solve_adjoint(y));
  };
  ScalarField shifted = u;
  for (std::size_t i = 0; i < shifted.values.size(); ++i)
    shifted.values[i] += t * v.values[i];
  const ScalarField ga = gradient_at(u);
  const ScalarField gb = gradient_at(shifted);
  std::vector<double> fd(ga.values.size());
  for (std::size_t i = 0; i < fd.size(); ++i)
    fd[i] = (gb.values[i] - ga.values[i]) / t - hv.values[i];
  CHECK(mass_norm(pb, fd) / mass_norm(pb, hv.values) <= 1e-4);
}

TEST_CASE("optimize: benchmark iteration counts at n=16") {
  const ControlProblem pb = make_benchmark_control_problem(16);
  OptimizerConfig cfg;
  cfg.rtol = 1e-3;
  cfg.maximum_iterations = 50;

  cfg.algorithm = Algorithm::gd;
  auto gd = optimize(pb, cfg);
  CHECK(gd.history.termination == Termination::converged);
  CHECK(gd.history.iterations() >= 28);
  CHECK(gd.history.iterations() <= 40);

  cfg.algorithm = Algorithm::ncg;
  auto ncg = optimize(pb, cfg);
  CHECK(ncg.history.termination == Termination::converged);
  CHECK(ncg.history.iterations() >= 7);
  CHECK(ncg.history.iterations() <= 14);

  cfg.algorithm = Algorithm::lbfgs;
  auto lbfgs = optimize(pb, cfg);
  CHECK(lbfgs.history.termination == Termination::converged);
  CHECK(lbfgs.history.iterations() >= 4);
  CHECK(lbfgs.history.iterations() <= 9);

  // costs strictly decrease along accepted iterates
  double previous = pb.cost(ScalarField(pb.mesh()), pb.solve_state(ScalarField(pb.mesh())));
  for (const auto& row : gd.history.rows) {
    CHECK(row.cost < previous);
    previous = row.cost;
  }

  // optimality residual at convergence
  const ScalarField p = pb.solve_adjoint(ncg.state);
  std::vector<double> density(ncg.control.values.size());
  for (std::size_t i = 0; i < density.size(); ++i)
    density[i] = pb.alpha() * ncg.control.values[i] - p.values[i];
  const ScalarField y0 = pb.solve_state(ScalarField(pb.mesh()));
  const ScalarField p0 = pb.solve_adjoint(y0);
  const ScalarField g0 = pb.compute_gradient(ScalarField(pb.mesh()), y0, p0);
  CHECK(mass_norm(pb, density) <=
        cfg.rtol * mass_norm(pb, g0.values) * (1.0 + 1e-12));
}

TEST_CASE("optimize: every ncg variant solves the benchmark") {
  const ControlProblem pb = make_benchmark_control_problem(16);
  for (NcgVariant variant : {NcgVariant::fr, NcgVariant::pr, NcgVariant::hs, NcgVariant::dy,
                             NcgVariant::hz}) {
    OptimizerConfig cfg;
    cfg.algorithm = Algorithm::ncg;
    cfg.ncg_variant = variant;
    cfg.rtol = 1e-3;
    cfg.maximum_iterations = 50;
    const auto sol = optimize(pb, cfg);
    CHECK(sol.history.termination == Termination::converged);
    CHECK(sol.history.iterations() <= 40);
  }
}

TEST_CASE("optimize: newton takes exactly one iteration from any start") {
  for (int n : {16, 32}) {
    const ControlProblem pb = make_benchmark_control_problem(n);
    OptimizerConfig cfg;
    cfg.algorithm = Algorithm::newton;
    cfg.rtol = 1e-3;

    const ScalarField y0 = pb.solve_state(ScalarField(pb.mesh()));
    const ScalarField p0 = pb.solve_adjoint(y0);
    const ScalarField g0 = pb.compute_gradient(ScalarField(pb.mesh()), y0, p0);

    const auto from_zero = optimize(pb, cfg);
    CHECK(from_zero.history.iterations() == 1);
    CHECK(from_zero.history.termination == Termination::converged);
    CHECK(from_zero.history.rows.back().gradient_norm <=
          1e-10 * mass_norm(pb, g0.values));

    const ScalarField u0 = random_field(pb.mesh(), 31);
    const auto from_random = optimize(pb, cfg, &u0);
    CHECK(from_random.history.iterations() == 1);
    CHECK(from_random.history.termination == Termination::converged);
  }
}

TEST_CASE("box constraints: pdas fixed point matches projected gradient") {
  ControlProblem pb = make_benchmark_control_problem(16);
  SolverSettings tight_solver;
  tight_solver.rtol = 1e-14;
  tight_solver.atol = 0.0;
  pb.set_linear_solver(tight_solver);
  pb.set_bounds(0.0, 50.0);  // lower bound genuinely active at the optimum

  OptimizerConfig pdas_cfg;
  pdas_cfg.algorithm = Algorithm::pdas;
  pdas_cfg.maximum_iterations = 50;
  const auto pdas = optimize(pb, pdas_cfg);
  CHECK(pdas.history.termination == Termination::converged);
  for (double v : pdas.control.values) CHECK(v >= -1e-14);

  const ScalarField pg = oracles::projected_gradient_oracle(pb, 1500);
  std::vector<double> diff(pdas.control.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = pdas.control.values[i] - pg.values[i];
  CHECK(mass_norm(pb, diff) <= 1e-8);

  // two-sided active box exercises both sets
  ControlProblem squeezed = make_benchmark_control_problem(16);
  squeezed.set_bounds(0.0, 0.3);
  const auto tight = optimize(squeezed, pdas_cfg);
  CHECK(tight.history.termination == Termination::converged);
  bool hit_upper = false;
  for (double v : tight.control.values) {
    CHECK(v <= 0.3 + 1e-14);
    hit_upper = hit_upper || v == 0.3;
  }
  CHECK(hit_upper);
}

TEST_CASE("box constraints: inert bounds reproduce the unconstrained run") {
  for (Algorithm alg : {Algorithm::gd, Algorithm::ncg, Algorithm::lbfgs, Algorithm::newton}) {
    const ControlProblem plain = make_benchmark_control_problem(16);
    ControlProblem boxed = make_benchmark_control_problem(16);
    boxed.set_bounds(-1e6, 1e6);

    OptimizerConfig cfg;
    cfg.algorithm = alg;
    cfg.rtol = 1e-3;
    const auto a = optimize(plain, cfg);
    const auto b = optimize(boxed, cfg);
    CHECK(a.history.iterations() == b.history.iterations());
    for (std::size_t i = 0; i < a.control.values.size(); ++i)
      CHECK(std::abs(a.control.values[i] - b.control.values[i]) <= 1e-12);
  }
}

TEST_CASE("optimize: argument validation") {
  const ControlProblem pb = make_benchmark_control_problem(4);
  OptimizerConfig bad;
  bad.rtol = -1.0;
  CHECK_THROWS_AS(optimize(pb, bad), std::invalid_argument);

  OptimizerConfig pdas_cfg;
  pdas_cfg.algorithm = Algorithm::pdas;
  CHECK_THROWS_AS(optimize(pb, pdas_cfg), std::invalid_argument);  // no bounds
}
