#include "pdeopt/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pdeopt/control.hpp"
#include "pdeopt/shape.hpp"

namespace pdeopt {

namespace {

const std::vector<Algorithm> kOcpAlgorithms = {Algorithm::gd, Algorithm::ncg, Algorithm::lbfgs,
                                               Algorithm::newton};
const std::vector<Algorithm> kShapeAlgorithms = {Algorithm::gd, Algorithm::ncg,
                                                 Algorithm::lbfgs};

}  // namespace

IterationBand expected_band(BenchTable table, Algorithm algorithm) {
  if (table == BenchTable::ocp_iterations) {
    switch (algorithm) {
      case Algorithm::gd: return {28, 40};
      case Algorithm::ncg: return {7, 14};
      case Algorithm::lbfgs: return {4, 9};
      case Algorithm::newton: return {1, 1};
      default: break;
    }
  } else {
    switch (algorithm) {
      case Algorithm::gd: return {38, 58};
      case Algorithm::ncg: return {14, 26};
      case Algorithm::lbfgs: return {8, 16};
      default: break;
    }
  }
  throw std::invalid_argument("expected_band: algorithm not part of the table");
}

bool BenchReport::all_pass() const {
  return std::all_of(cells.begin(), cells.end(),
                     [](const BenchCell& c) { return c.pass && !c.error; });
}

int BenchReport::column_spread(Algorithm algorithm) const {
  int low = std::numeric_limits<int>::max();
  int high = std::numeric_limits<int>::min();
  for (const auto& cell : cells) {
    if (cell.algorithm != algorithm || cell.error) continue;
    low = std::min(low, cell.iterations);
    high = std::max(high, cell.iterations);
  }
  if (high < low) return 0;
  return high - low;
}

BenchReport run_benchmark(BenchTable table, std::span<const int> sizes) {
  BenchReport report;
  report.table = table;
  const auto& algorithms =
      table == BenchTable::ocp_iterations ? kOcpAlgorithms : kShapeAlgorithms;
  const auto start_all = std::chrono::steady_clock::now();

  for (int n : sizes) {
    for (Algorithm algorithm : algorithms) {
      BenchCell cell;
      cell.n = n;
      cell.algorithm = algorithm;
      cell.band = expected_band(table, algorithm);
      const auto start = std::chrono::steady_clock::now();
      try {
        OptimizerConfig config;
        config.algorithm = algorithm;
        config.ncg_variant = NcgVariant::dy;
        config.maximum_iterations = 50;
        if (table == BenchTable::ocp_iterations) {
          config.rtol = 1e-3;
          const ControlProblem problem = make_benchmark_control_problem(n);
          const ControlSolution solution = optimize(problem, config);
          if (solution.history.termination != Termination::converged)
            throw std::runtime_error("run ended with " +
                                     to_string(solution.history.termination));
          cell.iterations = solution.history.iterations();
          cell.final_cost = problem.cost(solution.control, solution.state);
        } else {
          config.rtol = 5e-3;
          const ShapeProblem problem = make_benchmark_shape_problem(n);
          const ShapeSolution solution = optimize_shape(problem, config);
          if (solution.history.termination != Termination::converged)
            throw std::runtime_error("run ended with " +
                                     to_string(solution.history.termination));
          cell.iterations = solution.history.iterations();
          cell.final_cost = solution.cost;
          cell.worst_radius_ratio = solution.worst_radius_ratio;
          cell.worst_inverted = solution.worst_inverted;
        }
        cell.pass = cell.iterations >= cell.band.low && cell.iterations <= cell.band.high;
      } catch (const std::exception& e) {
        cell.error = true;
        cell.pass = false;
        cell.message = e.what();
      }
      cell.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.cells.push_back(std::move(cell));
    }
  }
  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_all).count();
  return report;
}

std::string to_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "n,algorithm,iterations,band_low,band_high,final_cost,seconds,pass\n";
  for (const auto& cell : report.cells) {
    out << cell.n << ',' << to_string(cell.algorithm) << ',' << cell.iterations << ','
        << cell.band.low << ',' << cell.band.high << ',';
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", cell.final_cost);
    out << buffer << ',';
    std::snprintf(buffer, sizeof buffer, "%.3f", cell.seconds);
    out << buffer << ',' << (cell.error ? "error" : (cell.pass ? "yes" : "no")) << '\n';
  }
  return out.str();
}

std::string format_table(const BenchReport& report) {
  const auto& algorithms =
      report.table == BenchTable::ocp_iterations ? kOcpAlgorithms : kShapeAlgorithms;
  std::ostringstream out;
  out << "   n";
  for (Algorithm a : algorithms) out << '\t' << to_string(a);
  out << "\tstatus\n";
  int current_n = -1;
  bool row_ok = true;
  std::string row;
  auto flush_row = [&]() {
    if (current_n >= 0) out << row << '\t' << (row_ok ? "ok" : "FAIL") << '\n';
  };
  for (const auto& cell : report.cells) {
    if (cell.n != current_n) {
      flush_row();
      current_n = cell.n;
      row_ok = true;
      char buffer[16];
      std::snprintf(buffer, sizeof buffer, "%4d", cell.n);
      row = buffer;
    }
    row += '\t';
    row += cell.error ? std::string("err") : std::to_string(cell.iterations);
    row_ok = row_ok && cell.pass && !cell.error;
  }
  flush_row();
  return out.str();
}

}  // namespace pdeopt
