#ifndef PDEOPT_SPARSE_HPP
#define PDEOPT_SPARSE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace pdeopt {

/// Compressed-row sparse matrix with sorted, duplicate-free columns per row.
/// All matrices assembled by this project are symmetric; a few operations
/// (Dirichlet elimination, symmetry probing) rely on that.
class SparseMatrix {
 public:
  struct Triplet {
    int row;
    int col;
    double value;
  };

  SparseMatrix() = default;

  /// Builds a matrix of dimension `dim`, accumulating duplicate entries.
  static SparseMatrix from_triplets(int dim, std::vector<Triplet> triplets);

  int dim() const { return static_cast<int>(offsets_.size()) - 1; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const int> row_offsets() const { return offsets_; }
  std::span<const int> columns() const { return columns_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;

  /// Stored value at (i, j), or 0 when the entry is not in the pattern.
  double coeff(int i, int j) const;

  std::vector<double> diagonal() const;
  double max_abs_value() const;

  /// Zeroes row and column `dof` and places a unit diagonal; requires a
  /// symmetric sparsity pattern (column entries are found through the
  /// mirrored rows). Used by Dirichlet elimination.
  void eliminate_symmetric(std::span<const int> dofs);

 private:
  std::vector<int> offsets_{0};
  std::vector<int> columns_;
  std::vector<double> values_;
};

}  // namespace pdeopt

#endif
