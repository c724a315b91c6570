#include "pdeopt/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pdeopt {

std::string to_string(ProblemKind k) { return k == ProblemKind::ocp ? "ocp" : "shape"; }

namespace {

std::string trim(const std::string& s) {
  std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value '" + value + "' for key '" + key + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("invalid integer value '" + value + "' for key '" + key + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("invalid boolean value '" + value + "' for key '" + key +
                    "' (use true or false)");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']')
    throw ConfigError("invalid list value '" + value + "' for key '" + key +
                      "' (expected bracketed list like [1, 2])");
  std::vector<int> out;
  const std::string inner = trim(value.substr(1, value.size() - 2));
  if (inner.empty()) return out;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

void apply_key(RunConfig& config, const std::string& section, const std::string& key,
               const std::string& value) {
  if (section.empty()) {
    if (key == "problem") {
      if (value == "ocp") config.problem = ProblemKind::ocp;
      else if (value == "shape") config.problem = ProblemKind::shape;
      else throw ConfigError("unknown problem '" + value + "' (use ocp or shape)");
    } else if (key == "mesh_n") {
      config.mesh_n = parse_int(key, value);
      if (config.mesh_n < 1) throw ConfigError("mesh_n must be >= 1");
    } else {
      throw ConfigError("unknown key '" + key + "' outside of any section");
    }
    return;
  }
  if (section == "OptimizationRoutine") {
    auto& r = config.routine;
    if (key == "algorithm") {
      const auto a = algorithm_from_string(value);
      if (!a) throw ConfigError("unknown algorithm '" + value + "'");
      r.algorithm = *a;
    } else if (key == "ncg_variant") {
      const auto v = ncg_variant_from_string(value);
      if (!v) throw ConfigError("unknown ncg_variant '" + value + "'");
      r.ncg_variant = *v;
    } else if (key == "rtol") r.rtol = parse_double(key, value);
    else if (key == "atol") r.atol = parse_double(key, value);
    else if (key == "maximum_iterations") r.maximum_iterations = parse_int(key, value);
    else if (key == "lbfgs_memory") r.lbfgs_memory = parse_int(key, value);
    else if (key == "armijo_epsilon") r.armijo_epsilon = parse_double(key, value);
    else if (key == "armijo_beta") r.armijo_beta = parse_double(key, value);
    else if (key == "pdas_c") r.pdas_c = parse_double(key, value);
    else throw ConfigError("unknown key '" + key + "' in section [OptimizationRoutine]");
    return;
  }
  if (section == "ShapeGradient") {
    auto& s = config.shape_gradient;
    if (key == "shape_bdry_def") s.bdry_def = parse_int_list(key, value);
    else if (key == "shape_bdry_fix") s.bdry_fix = parse_int_list(key, value);
    else if (key == "mu") s.mu = parse_double(key, value);
    else if (key == "lambda") s.lambda = parse_double(key, value);
    else if (key == "delta") s.delta = parse_double(key, value);
    else throw ConfigError("unknown key '" + key + "' in section [ShapeGradient]");
    return;
  }
  if (section == "Output") {
    auto& o = config.output;
    if (key == "directory") o.directory = value;
    else if (key == "export_vtk") o.export_vtk = parse_bool(key, value);
    else if (key == "export_history") o.export_history = parse_bool(key, value);
    else if (key == "export_iterates") o.export_iterates = parse_bool(key, value);
    else throw ConfigError("unknown key '" + key + "' in section [Output]");
    return;
  }
  throw ConfigError("unknown section [" + section + "]");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("malformed section header at line " + std::to_string(line_number) +
                          ": '" + line + "'");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("malformed line " + std::to_string(line_number) + ": '" + line +
                        "' (expected key = value)");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("missing key at line " + std::to_string(line_number));
    apply_key(config, section, key, value);
  }
  try {
    config.routine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (config.shape_gradient.mu <= 0.0) throw ConfigError("mu must be positive");
  if (config.shape_gradient.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (config.shape_gradient.delta < 0.0) throw ConfigError("delta must be >= 0");
  for (int m : config.shape_gradient.bdry_fix)
    for (int d : config.shape_gradient.bdry_def)
      if (m == d)
        throw ConfigError("marker " + std::to_string(m) +
                          " listed in both shape_bdry_def and shape_bdry_fix");
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::string format_list(const std::vector<int>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  return out + "]";
}

}  // namespace

std::string serialize(const RunConfig& config) {
  std::ostringstream out;
  out << "problem = " << to_string(config.problem) << "\n";
  out << "mesh_n = " << config.mesh_n << "\n\n";
  out << "[OptimizationRoutine]\n";
  out << "algorithm = " << to_string(config.routine.algorithm) << "\n";
  out << "rtol = " << format_double(config.routine.rtol) << "\n";
  out << "atol = " << format_double(config.routine.atol) << "\n";
  out << "maximum_iterations = " << config.routine.maximum_iterations << "\n";
  out << "ncg_variant = " << to_string(config.routine.ncg_variant) << "\n";
  out << "lbfgs_memory = " << config.routine.lbfgs_memory << "\n";
  out << "armijo_epsilon = " << format_double(config.routine.armijo_epsilon) << "\n";
  out << "armijo_beta = " << format_double(config.routine.armijo_beta) << "\n";
  out << "pdas_c = " << format_double(config.routine.pdas_c) << "\n\n";
  out << "[ShapeGradient]\n";
  out << "shape_bdry_def = " << format_list(config.shape_gradient.bdry_def) << "\n";
  out << "shape_bdry_fix = " << format_list(config.shape_gradient.bdry_fix) << "\n";
  out << "mu = " << format_double(config.shape_gradient.mu) << "\n";
  out << "lambda = " << format_double(config.shape_gradient.lambda) << "\n";
  out << "delta = " << format_double(config.shape_gradient.delta) << "\n\n";
  out << "[Output]\n";
  out << "directory = " << config.output.directory << "\n";
  out << "export_vtk = " << (config.output.export_vtk ? "true" : "false") << "\n";
  out << "export_history = " << (config.output.export_history ? "true" : "false") << "\n";
  out << "export_iterates = " << (config.output.export_iterates ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace pdeopt
