#include "pdeopt/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdeopt {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::gd: return "gd";
    case Algorithm::ncg: return "ncg";
    case Algorithm::lbfgs: return "lbfgs";
    case Algorithm::newton: return "newton";
    case Algorithm::pdas: return "pdas";
  }
  return "?";
}

std::string to_string(NcgVariant v) {
  switch (v) {
    case NcgVariant::fr: return "FR";
    case NcgVariant::pr: return "PR";
    case NcgVariant::hs: return "HS";
    case NcgVariant::dy: return "DY";
    case NcgVariant::hz: return "HZ";
  }
  return "?";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    case Termination::line_search_failure: return "line_search_failure";
  }
  return "?";
}

std::optional<Algorithm> algorithm_from_string(const std::string& name) {
  for (Algorithm a : {Algorithm::gd, Algorithm::ncg, Algorithm::lbfgs, Algorithm::newton,
                      Algorithm::pdas})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

std::optional<NcgVariant> ncg_variant_from_string(const std::string& name) {
  for (NcgVariant v :
       {NcgVariant::fr, NcgVariant::pr, NcgVariant::hs, NcgVariant::dy, NcgVariant::hz})
    if (to_string(v) == name) return v;
  return std::nullopt;
}

void OptimizerConfig::validate() const {
  if (!(rtol > 0.0)) throw std::invalid_argument("OptimizerConfig: rtol must be positive");
  if (atol < 0.0) throw std::invalid_argument("OptimizerConfig: atol must be >= 0");
  if (maximum_iterations < 1)
    throw std::invalid_argument("OptimizerConfig: maximum_iterations must be >= 1");
  if (lbfgs_memory < 1)
    throw std::invalid_argument("OptimizerConfig: lbfgs_memory must be >= 1");
  if (!(armijo_epsilon > 0.0) || !(armijo_epsilon < 1.0))
    throw std::invalid_argument("OptimizerConfig: armijo_epsilon must be in (0,1)");
  if (!(armijo_beta > 1.0))
    throw std::invalid_argument("OptimizerConfig: armijo_beta must be > 1");
  if (!(pdas_c > 0.0)) throw std::invalid_argument("OptimizerConfig: pdas_c must be positive");
}

SearchDirection::SearchDirection(Algorithm algorithm, NcgVariant variant, int memory)
    : algorithm_(algorithm), variant_(variant), memory_(static_cast<std::size_t>(memory)) {}

void SearchDirection::reset() {
  have_previous_ = false;
  prev_gradient_.clear();
  prev_direction_.clear();
  pairs_.clear();
}

std::vector<double> SearchDirection::next(const std::vector<double>& gradient,
                                          const DotFn& dot) {
  const std::size_t n = gradient.size();
  std::vector<double> d(n);

  if (algorithm_ == Algorithm::lbfgs) {
    // Two-loop recursion; all scalar products through `dot`, evaluated fresh
    // so a changing metric is picked up.
    std::vector<double> q = gradient;
    std::vector<double> alpha(pairs_.size());
    std::vector<double> rho(pairs_.size());
    for (std::size_t idx = pairs_.size(); idx-- > 0;) {
      const auto& [s, y] = pairs_[idx];
      const double sy = dot(s, y);
      if (sy <= 1e-14) {
        rho[idx] = 0.0;
        alpha[idx] = 0.0;
        continue;
      }
      rho[idx] = 1.0 / sy;
      alpha[idx] = rho[idx] * dot(s, q);
      for (std::size_t k = 0; k < n; ++k) q[k] -= alpha[idx] * y[k];
    }
    if (!pairs_.empty()) {
      const auto& [s, y] = pairs_.back();
      const double sy = dot(s, y);
      const double yy = dot(y, y);
      if (sy > 1e-14 && yy > 0.0) {
        const double gamma = sy / yy;
        for (double& v : q) v *= gamma;
      }
    }
    for (std::size_t idx = 0; idx < pairs_.size(); ++idx) {
      if (rho[idx] == 0.0) continue;
      const auto& [s, y] = pairs_[idx];
      const double beta = rho[idx] * dot(y, q);
      for (std::size_t k = 0; k < n; ++k) q[k] += (alpha[idx] - beta) * s[k];
    }
    for (std::size_t k = 0; k < n; ++k) d[k] = -q[k];
    if (dot(d, gradient) >= 0.0)
      for (std::size_t k = 0; k < n; ++k) d[k] = -gradient[k];
    return d;
  }

  if (algorithm_ == Algorithm::ncg && have_previous_) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = gradient[k] - prev_gradient_[k];
    const double gg_new = dot(gradient, gradient);
    const double gg_old = dot(prev_gradient_, prev_gradient_);
    const double dy_pair = dot(prev_direction_, y);
    double beta = 0.0;
    switch (variant_) {
      case NcgVariant::fr:
        beta = gg_old > 0.0 ? gg_new / gg_old : 0.0;
        break;
      case NcgVariant::pr:
        beta = gg_old > 0.0 ? std::max(0.0, dot(gradient, y) / gg_old) : 0.0;
        break;
      case NcgVariant::hs:
        beta = dy_pair != 0.0 ? dot(gradient, y) / dy_pair : 0.0;
        break;
      case NcgVariant::dy:
        beta = dy_pair != 0.0 ? gg_new / dy_pair : 0.0;
        break;
      case NcgVariant::hz: {
        if (dy_pair != 0.0) {
          const double yy = dot(y, y);
          const double dg_new = dot(prev_direction_, gradient);
          beta = (dot(y, gradient) - 2.0 * dg_new * yy / dy_pair) / dy_pair;
        }
        break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) d[k] = -gradient[k] + beta * prev_direction_[k];
    if (dot(d, gradient) >= 0.0)
      for (std::size_t k = 0; k < n; ++k) d[k] = -gradient[k];
  } else {
    for (std::size_t k = 0; k < n; ++k) d[k] = -gradient[k];
  }

  prev_gradient_ = gradient;
  prev_direction_ = d;
  have_previous_ = true;
  return d;
}

void SearchDirection::push_curvature_pair(std::vector<double> step,
                                          std::vector<double> gradient_change,
                                          const DotFn& dot) {
  if (algorithm_ != Algorithm::lbfgs) return;
  if (dot(step, gradient_change) <= 1e-14) return;  // curvature condition
  pairs_.emplace_back(std::move(step), std::move(gradient_change));
  while (pairs_.size() > memory_) pairs_.pop_front();
}

ArmijoResult armijo_backtrack(
    const std::function<std::optional<double>(const std::vector<double>&)>& cost,
    const DotFn& dot, const std::vector<double>& u, const std::vector<double>& d,
    const std::vector<double>& g, double cost_u, double t_init, double epsilon,
    const std::function<std::vector<double>(const std::vector<double>&)>& clamp,
    int max_halvings) {
  if (!(dot(g, d) < 0.0))
    throw std::invalid_argument("armijo_backtrack: not a descent direction");

  ArmijoResult result;
  double t = t_init;
  for (int j = 0; j <= max_halvings; ++j, t *= 0.5) {
    std::vector<double> trial(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] + t * d[k];
    if (clamp) trial = clamp(trial);
    std::vector<double> delta(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) delta[k] = trial[k] - u[k];
    const double decrease = dot(g, delta);
    const auto trial_cost = cost(trial);
    ++result.trials;
    if (!trial_cost.has_value()) continue;
    if (*trial_cost <= cost_u + epsilon * decrease) {
      result.accepted = true;
      result.step = t;
      result.point = std::move(trial);
      result.cost = *trial_cost;
      return result;
    }
  }
  return result;
}

}  // namespace pdeopt
