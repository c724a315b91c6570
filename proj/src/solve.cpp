#include "pdeopt/solve.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace pdeopt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

KernelSpace KernelSpace::build(std::vector<std::vector<double>> basis,
                               const SparseMatrix& metric) {
  KernelSpace space;
  std::vector<double> mq(metric.dim());
  // Two Gram-Schmidt sweeps keep the basis orthonormal to roundoff.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      auto& q = basis[i];
      for (std::size_t j = 0; j < i; ++j) {
        metric.multiply(basis[j], mq);
        const double proj = dot(mq, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] -= proj * basis[j][k];
      }
      metric.multiply(q, mq);
      const double norm = std::sqrt(dot(mq, q));
      if (!(norm > 1e-300))
        throw std::invalid_argument("KernelSpace: zero-norm kernel basis vector");
      for (double& v : q) v /= norm;
    }
  }
  space.basis_ = std::move(basis);
  for (const auto& q : space.basis_) space.metric_basis_.push_back(metric.apply(q));
  return space;
}

void KernelSpace::project_primal(std::span<double> v) const {
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const double coeff = dot(metric_basis_[i], v);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= coeff * basis_[i][k];
  }
}

void KernelSpace::project_dual(std::span<double> d) const {
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const double coeff = dot(basis_[i], d);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] -= coeff * metric_basis_[i][k];
  }
}

std::vector<double> project_out_kernel(std::span<const double> b,
                                       const std::vector<std::vector<double>>& kernel_basis,
                                       const SparseMatrix& metric) {
  const KernelSpace space = KernelSpace::build(kernel_basis, metric);
  std::vector<double> out(b.begin(), b.end());
  space.project_primal(out);
  return out;
}

std::vector<double> cg_solve(const SparseMatrix& A, std::span<const double> b,
                             const SolverSettings& settings, const KernelSpace* kernel,
                             std::span<const double> x0) {
  const int n = A.dim();
  assert(static_cast<int>(b.size()) == n);
  const int max_iterations =
      settings.max_iterations > 0 ? settings.max_iterations : 10 * std::max(n, 1);

  std::vector<double> rhs(b.begin(), b.end());
  if (kernel) kernel->project_dual(rhs);

  std::vector<double> x(n, 0.0);
  if (!x0.empty()) {
    assert(static_cast<int>(x0.size()) == n);
    x.assign(x0.begin(), x0.end());
    if (kernel) kernel->project_primal(x);
  }

  std::vector<double> inv_diag;
  if (settings.preconditioner == SolverSettings::Preconditioner::jacobi) {
    inv_diag = A.diagonal();
    for (double& d : inv_diag) d = (d != 0.0) ? 1.0 / d : 1.0;
  }

  const double target = std::max(settings.rtol * norm2(rhs), settings.atol);

  std::vector<double> r = A.apply(x);
  for (int i = 0; i < n; ++i) r[i] = rhs[i] - r[i];

  std::vector<double> z(n), p(n), ap(n);
  auto precondition = [&](const std::vector<double>& res, std::vector<double>& out) {
    if (inv_diag.empty())
      out = res;
    else
      for (int i = 0; i < n; ++i) out[i] = inv_diag[i] * res[i];
    if (kernel) kernel->project_primal(out);
  };

  double res_norm = norm2(r);
  if (settings.observer) settings.observer(0, x);
  if (res_norm <= target) return x;

  precondition(r, z);
  p = z;
  double rz = dot(r, z);

  for (int iter = 1; iter <= max_iterations; ++iter) {
    A.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw SolverError("cg_solve: non-positive curvature, matrix not positive definite",
                        res_norm, iter);
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    res_norm = norm2(r);
    if (settings.observer) settings.observer(iter, x);
    if (res_norm <= target) return x;
    precondition(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("cg_solve: no convergence within " + std::to_string(max_iterations) +
                        " iterations (residual " + std::to_string(res_norm) + ")",
                    res_norm, max_iterations);
}

std::vector<double> operator_cg(
    int dim, const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    const std::function<double(std::span<const double>, std::span<const double>)>& dot_fn,
    std::span<const double> b, double rtol, int max_iterations) {
  std::vector<double> x(dim, 0.0);
  std::vector<double> r(b.begin(), b.end());
  const double target = rtol * std::sqrt(dot_fn(r, r));
  if (std::sqrt(dot_fn(r, r)) <= target) return x;
  std::vector<double> p = r;
  double rr = dot_fn(r, r);
  for (int iter = 0; iter < max_iterations; ++iter) {
    const std::vector<double> ap = apply(p);
    const double pap = dot_fn(p, ap);
    if (!(pap > 0.0))
      throw SolverError("operator_cg: non-positive curvature", std::sqrt(rr), iter);
    const double alpha = rr / pap;
    for (int i = 0; i < dim; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < dim; ++i) r[i] -= alpha * ap[i];
    const double rr_next = dot_fn(r, r);
    if (std::sqrt(rr_next) <= target) return x;
    const double beta = rr_next / rr;
    rr = rr_next;
    for (int i = 0; i < dim; ++i) p[i] = r[i] + beta * p[i];
  }
  throw SolverError("operator_cg: no convergence within " + std::to_string(max_iterations) +
                        " iterations",
                    std::sqrt(rr), max_iterations);
}

double riesz_norm(std::span<const double> g, const SparseMatrix& metric) {
  const double q = dot(metric.apply(g), g);
  if (q < 0.0) throw std::runtime_error("riesz_norm: metric is not positive definite");
  return std::sqrt(q);
}

std::vector<double> RieszMap::gradient(std::vector<double> dual,
                                       std::span<const double> x0) const {
  return cg_solve(*metric, dual, settings, kernel, x0);
}

}  // namespace pdeopt
