#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pdeopt/benchmark.hpp"
#include "pdeopt/config.hpp"
#include "pdeopt/control.hpp"
#include "pdeopt/io.hpp"
#include "pdeopt/shape.hpp"

namespace {

using namespace pdeopt;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int run_solve(RunConfig config) {
  std::filesystem::create_directories(config.output.directory);
  OptimizationHistory history;

  if (config.problem == ProblemKind::ocp) {
    const ControlProblem problem = make_benchmark_control_problem(config.mesh_n);
    const ControlSolution solution = optimize(problem, config.routine);
    history = solution.history;
    std::printf("ocp n=%d algorithm=%s: %d iterations, %s, final cost %.8e\n", config.mesh_n,
                to_string(config.routine.algorithm).c_str(), history.iterations(),
                to_string(history.termination).c_str(),
                problem.cost(solution.control, solution.state));
    if (config.output.export_vtk) {
      const std::string path = join_path(config.output.directory, "solution.vtk");
      export_vtk(*problem.mesh(),
                 {{"control", &solution.control},
                  {"state", &solution.state},
                  {"desired_state", &problem.desired_state()}},
                 path);
      std::printf("wrote %s\n", path.c_str());
    }
  } else {
    const ShapeProblem problem = make_benchmark_shape_problem(config.mesh_n);
    ShapeProblem configured = problem;
    configured.mu = config.shape_gradient.mu;
    configured.lambda = config.shape_gradient.lambda;
    configured.delta = config.shape_gradient.delta;
    configured.bdry_def = config.shape_gradient.bdry_def;
    configured.bdry_fix = config.shape_gradient.bdry_fix;

    ShapeObserver observer;
    if (config.output.export_iterates) {
      observer = [&config](int iteration, const TriangleMesh& mesh, const ScalarField& state) {
        char name[64];
        std::snprintf(name, sizeof name, "mesh_%04d.vtk", iteration);
        export_vtk(mesh, {{"state", &state}}, join_path(config.output.directory, name));
      };
    }
    const ShapeSolution solution = optimize_shape(configured, config.routine, observer);
    history = solution.history;
    std::printf("shape n=%d algorithm=%s: %d iterations, %s, final cost %.8e\n", config.mesh_n,
                to_string(config.routine.algorithm).c_str(), history.iterations(),
                to_string(history.termination).c_str(), solution.cost);
    if (config.output.export_vtk) {
      const std::string path = join_path(config.output.directory, "solution.vtk");
      export_vtk(*solution.mesh, {{"state", &solution.state}}, path);
      std::printf("wrote %s\n", path.c_str());
    }
  }

  if (config.output.export_history) {
    const std::string path = join_path(config.output.directory, "history.csv");
    export_history(history, path);
    std::printf("wrote %s\n", path.c_str());
  }
  return history.termination == Termination::line_search_failure ? 1 : 0;
}

int run_benchmark_command(int table, const std::vector<int>& sizes, const std::string& out_dir) {
  const BenchTable which =
      table == 2 ? BenchTable::ocp_iterations : BenchTable::shape_iterations;
  const BenchReport report = run_benchmark(which, sizes);
  std::printf("Table %d iteration counts (band check against the reference windows):\n", table);
  std::fputs(format_table(report).c_str(), stdout);
  std::printf("total %.1f s\n", report.total_seconds);
  for (const auto& cell : report.cells)
    if (cell.error)
      std::printf("cell n=%d %s failed: %s\n", cell.n, to_string(cell.algorithm).c_str(),
                  cell.message.c_str());
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string path =
        join_path(out_dir, table == 2 ? "benchmark_table2.csv" : "benchmark_table3.csv");
    std::ofstream file(path, std::ios::binary);
    file << to_csv(report);
    std::printf("wrote %s\n", path.c_str());
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adjoint-based optimal control and shape optimization benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool export_vtk_flag = false;
  bool export_history_flag = false;
  int seed = 0;

  CLI::App* solve = app.add_subcommand("solve", "Run one problem from a configuration file");
  solve->add_option("--config", config_path, "INI configuration file")->required();
  solve->add_option("--out", out_dir, "Output directory (overrides [Output] directory)");
  solve->add_flag("--export-vtk", export_vtk_flag, "Write solution fields as legacy VTK");
  solve->add_flag("--export-history", export_history_flag, "Write iteration history CSV");
  solve->add_option("--seed", seed, "Seed for randomized self-checks (unused by solve)");

  int table = 2;
  std::string sizes_csv = "16,32,64,128";
  CLI::App* bench = app.add_subcommand("benchmark", "Reproduce an iteration-count table");
  bench->add_option("--table", table, "Which table to reproduce (2: control, 3: shape)")
      ->check(CLI::IsMember({2, 3}))
      ->required();
  bench->add_option("--sizes", sizes_csv, "Comma-separated mesh sizes (default 16,32,64,128)");
  bench->add_option("--out", out_dir, "Directory for the CSV report");
  bench->add_option("--seed", seed, "Seed for randomized self-checks (unused by benchmark)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      RunConfig config = load_config(config_path);
      if (!out_dir.empty()) config.output.directory = out_dir;
      if (export_vtk_flag) config.output.export_vtk = true;
      if (export_history_flag) config.output.export_history = true;
      return run_solve(std::move(config));
    }
    std::vector<int> sizes;
    std::stringstream ss(sizes_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) sizes.push_back(std::stoi(item));
    }
    return run_benchmark_command(table, sizes, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
