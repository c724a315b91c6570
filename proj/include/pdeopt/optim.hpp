#ifndef PDEOPT_OPTIM_HPP
#define PDEOPT_OPTIM_HPP

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pdeopt {

enum class Algorithm { gd, ncg, lbfgs, newton, pdas };
enum class NcgVariant { fr, pr, hs, dy, hz };

std::string to_string(Algorithm a);
std::string to_string(NcgVariant v);
std::optional<Algorithm> algorithm_from_string(const std::string& name);
std::optional<NcgVariant> ncg_variant_from_string(const std::string& name);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::gd;
  NcgVariant ncg_variant = NcgVariant::dy;
  double rtol = 1e-3;
  double atol = 0.0;
  int maximum_iterations = 50;
  int lbfgs_memory = 5;
  double armijo_epsilon = 1e-4;
  double armijo_beta = 2.0;
  double pdas_c = 1.0;

  bool operator==(const OptimizerConfig&) const = default;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

enum class Termination { converged, max_iterations, line_search_failure };
std::string to_string(Termination t);

struct HistoryRow {
  int iteration;
  double cost;
  double gradient_norm;
  double step_size;
};

/// One row per accepted outer iteration; empty when the initial point already
/// satisfies the stopping test.
struct OptimizationHistory {
  std::vector<HistoryRow> rows;
  Termination termination = Termination::max_iterations;

  int iterations() const { return static_cast<int>(rows.size()); }
};

using DotFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Produces descent directions for gd / ncg / lbfgs from gradient coefficient
/// vectors. The caller supplies the scalar product, which may change between
/// calls (shape optimization reassembles its metric on the current mesh).
/// NCG restarts on -g whenever the candidate loses the descent property;
/// L-BFGS drops curvature pairs with <s,y> <= 1e-14.
class SearchDirection {
 public:
  SearchDirection(Algorithm algorithm, NcgVariant variant, int memory);

  std::vector<double> next(const std::vector<double>& gradient, const DotFn& dot);
  void push_curvature_pair(std::vector<double> step, std::vector<double> gradient_change,
                           const DotFn& dot);
  void reset();

  /// True once L-BFGS holds secant pairs; such directions carry their own
  /// scale and the line search restarts them from a unit trial step.
  bool has_curvature() const { return !pairs_.empty(); }

 private:
  Algorithm algorithm_;
  NcgVariant variant_;
  std::size_t memory_;
  std::vector<double> prev_gradient_;
  std::vector<double> prev_direction_;
  bool have_previous_ = false;
  std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs_;  // (s, y)
};

struct ArmijoResult {
  bool accepted = false;
  double step = 0.0;
  std::vector<double> point;
  double cost = 0.0;
  int trials = 0;
};

/// Backtracking line search: starting from t_init, halves t until
///   cost(P(u + t d)) <= cost_u + epsilon * <g, P(u + t d) - u>,
/// where P is the optional clamp. The evaluator may return nullopt to veto a
/// trial point (mesh-quality gate), which counts as a failed test. Gives up
/// after max_halvings. Requires <g, d> < 0.
ArmijoResult armijo_backtrack(
    const std::function<std::optional<double>(const std::vector<double>&)>& cost,
    const DotFn& dot, const std::vector<double>& u, const std::vector<double>& d,
    const std::vector<double>& g, double cost_u, double t_init, double epsilon,
    const std::function<std::vector<double>(const std::vector<double>&)>& clamp = {},
    int max_halvings = 30);

}  // namespace pdeopt

#endif
