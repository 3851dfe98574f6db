#ifndef KDTL_LEAST_SQUARES_HPP
#define KDTL_LEAST_SQUARES_HPP

// Levenberg-Marquardt for small dense problems. The residual function returns already-weighted
// residuals r_i = (y_i - f_i(x)) / sigma_i, so chi^2 = |r|^2 and the covariance is (J^T J)^-1.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "kdtl/error.hpp"

namespace kdtl {

struct LmOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;  // on every parameter step
  double fd_step = 1e-6;              // central differences, relative (absolute floor fd_floor)
  double fd_floor = 1e-6;
  Eigen::VectorXd lower_bounds;  // empty = unbounded
  // Analytic Jacobian of the weighted residuals; finite differences when empty.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

struct LmResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  double chi_squared = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<bool> at_lower_bound;
};

template <class Residuals>
Eigen::MatrixXd finite_difference_jacobian(Residuals& residuals, const Eigen::VectorXd& x, const LmOptions& opt) {
  const Eigen::VectorXd r0 = residuals(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = opt.fd_step * std::max(std::abs(x[j]), opt.fd_floor);
    Eigen::VectorXd hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    jac.col(j) = (residuals(hi) - residuals(lo)) / (2.0 * h);
  }
  return jac;
}

/// Minimises |residuals(x)|^2. Throws FitError when the final normal matrix is singular.
template <class Residuals>
LmResult levenberg_marquardt(Residuals&& residuals, Eigen::VectorXd x, const LmOptions& opt = {}) {
  const Eigen::Index n = x.size();
  const bool bounded = opt.lower_bounds.size() == n;
  const auto project = [&](Eigen::VectorXd& p) {
    if (bounded) p = p.cwiseMax(opt.lower_bounds);
  };
  const auto jacobian = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd {
    return opt.jacobian ? opt.jacobian(p) : finite_difference_jacobian(residuals, p, opt);
  };
  project(x);

  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  LmResult out;
  int it = 0;
  for (; it < opt.max_iterations && !out.converged; ++it) {
    const Eigen::MatrixXd jac = jacobian(x);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    if (cost == 0.0 || g.lpNorm<Eigen::Infinity>() == 0.0) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-300);
    // Parameters held at their bound by a gradient pointing outwards are frozen for this step.
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    if (bounded) {
      for (Eigen::Index j = 0; j < n; ++j) active[static_cast<std::size_t>(j)] = x[j] <= opt.lower_bounds[j] && g[j] > 0.0;
    }
    bool stepped = false;
    while (lambda < 1e20) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * scale;
      Eigen::VectorXd rhs = g;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        a.row(j).setZero();
        a.col(j).setZero();
        a(j, j) = 1.0;
        rhs[j] = 0.0;
      }
      Eigen::VectorXd candidate = x - a.ldlt().solve(rhs);
      project(candidate);
      const Eigen::VectorXd step = candidate - x;
      const Eigen::VectorXd r_new = residuals(candidate);
      const double cost_new = r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new <= cost) {
        bool small = true;
        for (Eigen::Index j = 0; j < n; ++j) {
          small = small && std::abs(step[j]) <= opt.relative_tolerance * (std::abs(candidate[j]) + opt.relative_tolerance);
        }
        x = candidate;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 10.0, 1e-12);
        stepped = true;
        out.converged = small;
        break;
      }
      lambda *= 10.0;
    }
    // No downhill step at any damping: x is a (possibly bound-constrained) minimum to machine precision.
    if (!stepped) {
      out.converged = true;
      break;
    }
  }

  out.parameters = x;
  out.chi_squared = cost;
  out.iterations = it;
  out.at_lower_bound.assign(static_cast<std::size_t>(n), false);
  if (bounded) {
    for (Eigen::Index j = 0; j < n; ++j) out.at_lower_bound[static_cast<std::size_t>(j)] = x[j] <= opt.lower_bounds[j];
  }
  const Eigen::MatrixXd jac = jacobian(x);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible()) throw FitError("singular normal matrix at the solution");
  out.covariance = lu.inverse();
  return out;
}

}  // namespace kdtl

#endif  // KDTL_LEAST_SQUARES_HPP
