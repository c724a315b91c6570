#ifndef PDEOPT_SOLVE_HPP
#define PDEOPT_SOLVE_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdeopt/sparse.hpp"

namespace pdeopt {

struct SolverSettings {
  enum class Preconditioner { none, jacobi };

  double rtol = 1e-12;
  double atol = 1e-14;
  int max_iterations = 0;  // 0 means 10 * dimension
  Preconditioner preconditioner = Preconditioner::jacobi;

  /// Observer invoked with (iteration, current iterate); test hook.
  std::function<void(int, std::span<const double>)> observer;

  bool operator==(const SolverSettings& o) const {
    return rtol == o.rtol && atol == o.atol && max_iterations == o.max_iterations &&
           preconditioner == o.preconditioner;
  }
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), final_residual(residual), iterations(iterations) {}
  double final_residual;
  int iterations;
};

/// Orthonormal basis of a singular operator's kernel together with the scalar
/// product that pins the complement. Solving A x = b with a KernelSpace means
/// solving on the metric-orthogonal complement of span(basis): the right-hand
/// side loses its dual pairing with the kernel and iterates stay
/// metric-orthogonal to it.
class KernelSpace {
 public:
  /// Metric-orthonormalizes the given spanning vectors (modified Gram-Schmidt,
  /// run twice). Throws on a (numerically) zero-norm basis vector.
  static KernelSpace build(std::vector<std::vector<double>> basis, const SparseMatrix& metric);

  const std::vector<std::vector<double>>& basis() const { return basis_; }
  const std::vector<std::vector<double>>& metric_basis() const { return metric_basis_; }

  /// v <- v - q_i <q_i, v>_M  (range of the projector: metric-orthogonal complement)
  void project_primal(std::span<double> v) const;
  /// d <- d - (M q_i) (q_i' d)  (removes the functional's action on the kernel)
  void project_dual(std::span<double> d) const;

 private:
  std::vector<std::vector<double>> basis_;         // metric-orthonormal
  std::vector<std::vector<double>> metric_basis_;  // M q_i
};

/// Spec'd helper: metric-orthogonal projection of b against the (not yet
/// orthonormal) kernel basis.
std::vector<double> project_out_kernel(std::span<const double> b,
                                       const std::vector<std::vector<double>>& kernel_basis,
                                       const SparseMatrix& metric);

/// Preconditioned conjugate gradients for symmetric positive (semi)definite
/// systems. Terminates when ||Ax - b|| <= max(rtol ||b||, atol). Throws
/// SolverError on exhausted iterations (carrying the final residual) or when
/// a direction of non-positive curvature reveals an indefinite matrix.
/// Sequential and deterministic for identical inputs. `x0`, when given, is
/// the initial guess.
std::vector<double> cg_solve(const SparseMatrix& A, std::span<const double> b,
                             const SolverSettings& settings = {},
                             const KernelSpace* kernel = nullptr,
                             std::span<const double> x0 = {});

/// Matrix-free CG in a caller-chosen inner product; used for the Newton and
/// active-set systems whose operators exist only as procedures.
std::vector<double> operator_cg(
    int dim, const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    const std::function<double(std::span<const double>, std::span<const double>)>& dot,
    std::span<const double> b, double rtol, int max_iterations);

/// sqrt(g' M g); throws if the quadratic form comes out negative.
double riesz_norm(std::span<const double> g, const SparseMatrix& metric);

/// Gradient machinery for one choice of scalar product: turns derivative
/// (dual) vectors into gradients by solving metric * g = dual, optionally on
/// the complement of a kernel.
struct RieszMap {
  const SparseMatrix* metric = nullptr;
  const KernelSpace* kernel = nullptr;
  SolverSettings settings{};

  std::vector<double> gradient(std::vector<double> dual,
                               std::span<const double> x0 = {}) const;
  double norm(std::span<const double> g) const { return riesz_norm(g, *metric); }
};

}  // namespace pdeopt

#endif
