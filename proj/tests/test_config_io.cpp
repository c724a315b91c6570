#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pdeopt/benchmark.hpp"
#include "pdeopt/config.hpp"
#include "pdeopt/io.hpp"
#include "pdeopt/mesh.hpp"

using namespace pdeopt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const char* name) {
  return std::string("pdeopt_test_") + name;
}

}  // namespace

TEST_CASE("config: the minimal control configuration file") {
  const RunConfig config = parse_config(
      "[OptimizationRoutine]\n"
      "algorithm = ncg\n"
      "rtol = 1e-3\n"
      "maximum_iterations = 50\n"
      "\n"
      "# additional parameters\n"
      "# ...\n");
  CHECK(config.routine.algorithm == Algorithm::ncg);
  CHECK(config.routine.rtol == 1e-3);
  CHECK(config.routine.maximum_iterations == 50);
  CHECK(config.problem == ProblemKind::ocp);
}

TEST_CASE("config: the minimal shape configuration file") {
  const RunConfig config = parse_config(
      "problem = shape\n"
      "\n"
      "[OptimizationRoutine]\n"
      "algorithm = ncg\n"
      "rtol = 5e-3\n"
      "maximum_iterations = 50\n"
      "\n"
      "[ShapeGradient]\n"
      "shape_bdry_def = [1]\n"
      "shape_bdry_fix = []\n"
      "\n"
      "# additional parameters\n"
      "# ...\n");
  CHECK(config.problem == ProblemKind::shape);
  CHECK(config.routine.rtol == 5e-3);
  CHECK(config.shape_gradient.bdry_def == std::vector<int>{1});
  CHECK(config.shape_gradient.bdry_fix.empty());
}

TEST_CASE("config: empty document yields the documented defaults") {
  const RunConfig config = parse_config("");
  CHECK(config.problem == ProblemKind::ocp);
  CHECK(config.mesh_n == 64);
  CHECK(config.routine.algorithm == Algorithm::gd);
  CHECK(config.routine.rtol == 1e-3);
  CHECK(config.routine.atol == 0.0);
  CHECK(config.routine.maximum_iterations == 50);
  CHECK(config.routine.ncg_variant == NcgVariant::dy);
  CHECK(config.routine.lbfgs_memory == 5);
  CHECK(config.routine.armijo_epsilon == 1e-4);
  CHECK(config.routine.armijo_beta == 2.0);
  CHECK(config.routine.pdas_c == 1.0);
  CHECK(config.shape_gradient.mu == 1.0);
  CHECK(config.shape_gradient.lambda == 0.0);
  CHECK(config.shape_gradient.delta == 0.0);
}

TEST_CASE("config: errors name the offending key or line") {
  try {
    parse_config("[OptimizationRoutine]\nalgorihtm = gd\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("algorihtm") != std::string::npos);
  }

  try {
    parse_config("[OptimizationRoutine]\nrtol = fast\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("rtol") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_config("[OptimizationRoutine\nrtol = 1e-3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[OptimizationRoutine]\nalgorithm = bfgs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[Mystery]\nkey = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mesh_n = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just some text\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[ShapeGradient]\nshape_bdry_def = 1, 2\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config("[ShapeGradient]\nshape_bdry_def = [1]\nshape_bdry_fix = [1]\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_config("[OptimizationRoutine]\nrtol = -1\n"), ConfigError);
}

TEST_CASE("config: integer lists") {
  const RunConfig config = parse_config("[ShapeGradient]\nshape_bdry_def = [1, 2, 3]\n");
  CHECK(config.shape_gradient.bdry_def == std::vector<int>({1, 2, 3}));
}

TEST_CASE("config: serialize/parse round trip is a fixpoint") {
  RunConfig config;
  config.problem = ProblemKind::shape;
  config.mesh_n = 32;
  config.routine.algorithm = Algorithm::lbfgs;
  config.routine.rtol = 7.25e-4;
  config.routine.atol = 1e-11;
  config.routine.maximum_iterations = 77;
  config.routine.ncg_variant = NcgVariant::hz;
  config.routine.lbfgs_memory = 3;
  config.routine.armijo_epsilon = 2e-4;
  config.routine.armijo_beta = 1.5;
  config.routine.pdas_c = 0.125;
  config.shape_gradient.bdry_def = {1};
  config.shape_gradient.mu = 2.5;
  config.shape_gradient.delta = 1e-3;
  config.output.directory = "out";
  config.output.export_vtk = true;

  const std::string text = serialize(config);
  const RunConfig reparsed = parse_config(text);
  CHECK(reparsed == config);
  CHECK(serialize(reparsed) == text);
}

TEST_CASE("history csv: shape of the file and bitwise round trip") {
  const std::string path = temp_path("history.csv");

  OptimizationHistory empty;
  export_history(empty, path);
  CHECK(slurp(path) == "iter,cost,grad_norm,step_size\n");

  OptimizationHistory three;
  three.rows = {{1, 4.4353831417e-05, 1.0 / 3.0, 1.0},
                {2, 3.2e-05, 2.49e-4, 0.5},
                {3, 1.0e-07, 1.0e-9, 2.0}};
  export_history(three, path);
  const std::string text = slurp(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find('\r') == std::string::npos);

  const auto rows = read_history_csv(path);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].iteration == three.rows[i].iteration);
    CHECK(rows[i].cost == three.rows[i].cost);
    CHECK(rows[i].gradient_norm == three.rows[i].gradient_norm);
    CHECK(rows[i].step_size == three.rows[i].step_size);
  }

  // identical input produces identical bytes
  export_history(three, path + "2");
  CHECK(slurp(path) == slurp(path + "2"));
  std::remove(path.c_str());
  std::remove((path + "2").c_str());
}

TEST_CASE("vtk export: structure, field sizes, determinism") {
  const auto mesh = std::make_shared<const TriangleMesh>(unit_square_mesh(1));
  const ScalarField scalar(mesh, 3.5);
  VectorField vector(mesh);
  for (std::size_t i = 0; i < vector.values.size(); ++i) vector.values[i] = 0.25 * i;

  const std::string path = temp_path("mesh.vtk");
  export_vtk(*mesh, {{"height", &scalar}, {"flow", &vector}}, path);
  const std::string text = slurp(path);

  // minimal legacy-VTK reader: section headers and counts
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# vtk DataFile Version 3.0");
  std::getline(in, line);  // title
  std::getline(in, line);
  CHECK(line == "ASCII");
  std::getline(in, line);
  CHECK(line == "DATASET UNSTRUCTURED_GRID");
  std::getline(in, line);
  CHECK(line == "POINTS 4 double");
  int zeros = 0;
  for (int i = 0; i < 4; ++i) {
    double x, y, z;
    in >> x >> y >> z;
    if (z == 0.0) ++zeros;
  }
  CHECK(zeros == 4);
  std::getline(in, line);  // finish the coordinate line
  std::getline(in, line);
  CHECK(line == "CELLS 2 8");
  int type_5 = 0;
  for (int i = 0; i < 2; ++i) {
    int k, a, b, c;
    in >> k >> a >> b >> c;
    CHECK(k == 3);
    CHECK(a >= 0);
    CHECK(c < 4);
  }
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "CELL_TYPES 2");
  for (int i = 0; i < 2; ++i) {
    int t;
    in >> t;
    if (t == 5) ++type_5;
  }
  CHECK(type_5 == 2);
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "POINT_DATA 4");
  std::getline(in, line);
  CHECK(line == "SCALARS height double 1");
  std::getline(in, line);
  CHECK(line == "LOOKUP_TABLE default");
  for (int i = 0; i < 4; ++i) {
    double v;
    in >> v;
    CHECK(v == 3.5);
  }
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "VECTORS flow double");
  CHECK(in.good());

  export_vtk(*mesh, {{"height", &scalar}, {"flow", &vector}}, path + "2");
  CHECK(slurp(path) == slurp(path + "2"));
  std::remove(path.c_str());
  std::remove((path + "2").c_str());

  // mesh-only export and error paths
  export_vtk(*mesh, {}, path);
  CHECK(slurp(path).find("POINT_DATA") == std::string::npos);
  std::remove(path.c_str());

  const auto other = std::make_shared<const TriangleMesh>(unit_square_mesh(2));
  const ScalarField mismatched(other, 1.0);
  CHECK_THROWS_AS(export_vtk(*mesh, {{"bad", &mismatched}}, path), IoError);
  CHECK_THROWS_AS(export_vtk(*mesh, {{"bad name", &scalar}}, path), IoError);
}

TEST_CASE("benchmark report: empty size list and the newton column") {
  const BenchReport empty = run_benchmark(BenchTable::ocp_iterations, {});
  CHECK(empty.cells.empty());
  CHECK(empty.all_pass());
  CHECK(to_csv(empty) == "n,algorithm,iterations,band_low,band_high,final_cost,seconds,pass\n");

  const std::vector<int> sizes = {16};
  const BenchReport report = run_benchmark(BenchTable::ocp_iterations, sizes);
  REQUIRE(report.cells.size() == 4);
  for (const auto& cell : report.cells) {
    CHECK(!cell.error);
    CHECK(cell.pass);
    if (cell.algorithm == Algorithm::newton) CHECK(cell.iterations == 1);
  }
  CHECK(report.column_spread(Algorithm::newton) == 0);
  const std::string csv = to_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(format_table(report).find("ok") != std::string::npos);
}
