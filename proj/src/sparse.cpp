#include "pdeopt/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace pdeopt {

SparseMatrix SparseMatrix::from_triplets(int dim, std::vector<Triplet> triplets) {
  if (dim < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  SparseMatrix m;
  m.offsets_.assign(dim + 1, 0);

  // Counting sort by row, then sort and merge the short per-row runs.
  std::vector<int> row_counts(dim, 0);
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim)
      throw std::invalid_argument("SparseMatrix: triplet index out of range");
    ++row_counts[t.row];
  }
  std::vector<int> row_begin(dim + 1, 0);
  for (int r = 0; r < dim; ++r) row_begin[r + 1] = row_begin[r] + row_counts[r];
  std::vector<Triplet> sorted(triplets.size());
  {
    std::vector<int> cursor(row_begin.begin(), row_begin.end() - 1);
    for (const auto& t : triplets) sorted[cursor[t.row]++] = t;
  }

  m.columns_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (int r = 0; r < dim; ++r) {
    auto first = sorted.begin() + row_begin[r];
    auto last = sorted.begin() + row_begin[r + 1];
    std::sort(first, last, [](const Triplet& a, const Triplet& b) { return a.col < b.col; });
    for (auto it = first; it != last;) {
      int col = it->col;
      double sum = 0.0;
      for (; it != last && it->col == col; ++it) sum += it->value;
      m.columns_.push_back(col);
      m.values_.push_back(sum);
    }
    m.offsets_[r + 1] = static_cast<int>(m.columns_.size());
  }
  return m;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  const int n = dim();
  assert(static_cast<int>(x.size()) == n && static_cast<int>(y.size()) == n);
  for (int r = 0; r < n; ++r) {
    double sum = 0.0;
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) sum += values_[k] * x[columns_[k]];
    y[r] = sum;
  }
}

std::vector<double> SparseMatrix::apply(std::span<const double> x) const {
  std::vector<double> y(dim());
  multiply(x, y);
  return y;
}

double SparseMatrix::coeff(int i, int j) const {
  auto first = columns_.begin() + offsets_[i];
  auto last = columns_.begin() + offsets_[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[it - columns_.begin()];
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(dim());
  for (int i = 0; i < dim(); ++i) d[i] = coeff(i, i);
  return d;
}

double SparseMatrix::max_abs_value() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void SparseMatrix::eliminate_symmetric(std::span<const int> dofs) {
  std::vector<char> eliminated(dim(), 0);
  for (int dof : dofs) eliminated[dof] = 1;
  for (int r = 0; r < dim(); ++r) {
    const bool row_gone = eliminated[r];
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (row_gone)
        values_[k] = (columns_[k] == r) ? 1.0 : 0.0;
      else if (eliminated[columns_[k]])
        values_[k] = 0.0;
    }
  }
}

}  // namespace pdeopt
