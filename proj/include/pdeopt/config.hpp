#ifndef PDEOPT_CONFIG_HPP
#define PDEOPT_CONFIG_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "pdeopt/optim.hpp"

namespace pdeopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { ocp, shape };
std::string to_string(ProblemKind k);

struct ShapeGradientConfig {
  std::vector<int> bdry_def{1};
  std::vector<int> bdry_fix{};
  double mu = 1.0;
  double lambda = 0.0;
  double delta = 0.0;

  bool operator==(const ShapeGradientConfig&) const = default;
};

struct OutputConfig {
  std::string directory = ".";
  bool export_vtk = false;
  bool export_history = false;
  bool export_iterates = false;  // per-iteration meshes, shape runs only

  bool operator==(const OutputConfig&) const = default;
};

/// One benchmark run: problem selection plus the [OptimizationRoutine],
/// [ShapeGradient] and [Output] sections.
struct RunConfig {
  ProblemKind problem = ProblemKind::ocp;
  int mesh_n = 64;
  OptimizerConfig routine;
  ShapeGradientConfig shape_gradient;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the INI dialect of the configuration files: case-sensitive keys,
/// `#` comments, `[Section]` headers, bracketed integer lists `[1, 2]`.
/// `problem` and `mesh_n` live before the first section header. Unknown keys
/// and sections, malformed headers, bad numbers, and algorithm names outside
/// the roster raise ConfigError naming the offender.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Inverse of parse_config up to formatting: parse(serialize(c)) == c.
std::string serialize(const RunConfig& config);

}  // namespace pdeopt

#endif
