#ifndef PDEOPT_IO_HPP
#define PDEOPT_IO_HPP

#include <string>
#include <variant>
#include <vector>

#include "pdeopt/fields.hpp"
#include "pdeopt/optim.hpp"

namespace pdeopt {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV with header `iter,cost,grad_norm,step_size`, one row per iteration,
/// 17 significant digits, LF line endings.
void export_history(const OptimizationHistory& history, const std::string& path);

/// Round-trip reader for the CSV format above.
std::vector<HistoryRow> read_history_csv(const std::string& path);

struct VtkField {
  std::string name;
  std::variant<const ScalarField*, const VectorField*> data;
};

/// Legacy VTK (DataFile Version 3.0) ASCII unstructured grid: POINTS with
/// z = 0, triangle CELLS (type 5), then POINT_DATA blocks in declaration
/// order. Throws IoError on field/mesh mismatch or write failure.
void export_vtk(const TriangleMesh& mesh, const std::vector<VtkField>& fields,
                const std::string& path);

}  // namespace pdeopt

#endif
