#ifndef PDEOPT_BENCHMARK_HPP
#define PDEOPT_BENCHMARK_HPP

#include <span>
#include <string>
#include <vector>

#include "pdeopt/optim.hpp"

namespace pdeopt {

enum class BenchTable { ocp_iterations, shape_iterations };

/// Expected iteration windows per algorithm; a run outside its window fails
/// the cell.
struct IterationBand {
  int low;
  int high;
};

struct BenchCell {
  int n = 0;
  Algorithm algorithm = Algorithm::gd;
  int iterations = -1;
  IterationBand band{0, 0};
  double final_cost = 0.0;
  double seconds = 0.0;
  double worst_radius_ratio = 1.0;  // shape cells: min over accepted iterates
  int worst_inverted = 0;           // shape cells: inverted cells ever accepted
  bool pass = false;
  bool error = false;
  std::string message;
};

struct BenchReport {
  BenchTable table = BenchTable::ocp_iterations;
  std::vector<BenchCell> cells;
  double total_seconds = 0.0;

  bool all_pass() const;
  /// max - min iteration count over mesh sizes, per algorithm column.
  int column_spread(Algorithm algorithm) const;
};

/// Runs every (algorithm, mesh size) cell of the requested table with the
/// benchmark settings (ocp: rtol 1e-3 from u0 = 0 with gd/ncg/lbfgs/newton;
/// shape: rtol 5e-3 with gd/ncg/lbfgs). Failures are recorded per cell and do
/// not abort the remaining cells.
BenchReport run_benchmark(BenchTable table, std::span<const int> sizes);

IterationBand expected_band(BenchTable table, Algorithm algorithm);

std::string to_csv(const BenchReport& report);
std::string format_table(const BenchReport& report);

}  // namespace pdeopt

#endif
