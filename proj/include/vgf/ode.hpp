#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "vgf/errors.hpp"

namespace vgf {

struct IntegrateOptions {
  double rel_tol = 1e-7;
  double abs_tol = 1e-7;
  double h_initial = 0.0;  // 0: pick automatically
  double h_min = 1e-12;
  double h_max = 0.0;  // 0: no cap beyond the span
  std::int64_t max_steps = 200'000'000;
};

namespace detail {

inline double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& x1, double abs_tol, double rel_tol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = abs_tol + rel_tol * std::max(std::abs(x0[i]), std::abs(x1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of x' = f(t, x) from t0 to t1.
/// Steps are clipped to land exactly on t1. A SingularGeometry thrown by the
/// right-hand side during a trial step triggers a step-size reduction, since
/// an over-long trial stage may probe states the solution never reaches.
/// `on_accept` is invoked after every accepted step.
template <class Rhs>
Eigen::VectorXd integrate_rk45(
    Rhs&& f, double t0, Eigen::VectorXd x, double t1, const IntegrateOptions& opts = {},
    const std::function<void(double, const Eigen::VectorXd&)>& on_accept = nullptr) {
  // clang-format off
  constexpr double c2 = 1.0/5, c3 = 3.0/10, c4 = 4.0/5, c5 = 8.0/9;
  constexpr double a21 = 1.0/5;
  constexpr double a31 = 3.0/40, a32 = 9.0/40;
  constexpr double a41 = 44.0/45, a42 = -56.0/15, a43 = 32.0/9;
  constexpr double a51 = 19372.0/6561, a52 = -25360.0/2187, a53 = 64448.0/6561, a54 = -212.0/729;
  constexpr double a61 = 9017.0/3168, a62 = -355.0/33, a63 = 46732.0/5247, a64 = 49.0/176,
                   a65 = -5103.0/18656;
  constexpr double b1 = 35.0/384, b3 = 500.0/1113, b4 = 125.0/192, b5 = -2187.0/6784,
                   b6 = 11.0/84;
  constexpr double e1 = 35.0/384 - 5179.0/57600, e3 = 500.0/1113 - 7571.0/16695,
                   e4 = 125.0/192 - 393.0/640, e5 = -2187.0/6784 + 92097.0/339200,
                   e6 = 11.0/84 - 187.0/2100, e7 = -1.0/40;
  // clang-format on

  if (t1 <= t0) return x;
  const double span = t1 - t0;
  const double h_max = (opts.h_max > 0.0) ? std::min(opts.h_max, span) : span;
  double t = t0;
  double h = (opts.h_initial > 0.0) ? std::min(opts.h_initial, h_max) : std::min(1.0, h_max);

  Eigen::VectorXd k1 = f(t, x);  // FSAL: stays valid across rejected steps
  std::int64_t steps = 0;

  while (t < t1) {
    if (++steps > opts.max_steps) {
      throw StepSizeUnderflow("integration exceeded the step budget at t = " + std::to_string(t));
    }
    h = std::min(h, t1 - t);
    if (h < opts.h_min) {
      throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));
    }

    Eigen::VectorXd k2, k3, k4, k5, k6, k7, x_new;
    try {
      k2 = f(t + c2 * h, x + h * (a21 * k1));
      k3 = f(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
      k4 = f(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = f(t + h, x_new);
    } catch (const SingularGeometry&) {
      if (h <= 4.0 * opts.h_min) throw;
      h *= 0.25;
      continue;
    }

    const Eigen::VectorXd err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double norm = detail::error_norm(err, x, x_new, opts.abs_tol, opts.rel_tol);

    if (norm <= 1.0) {
      t += h;
      x = std::move(x_new);
      k1 = std::move(k7);  // FSAL
      if (on_accept) on_accept(t, x);
      const double grow = (norm > 0.0) ? 0.9 * std::pow(norm, -0.2) : 5.0;
      h = std::min(h * std::clamp(grow, 0.2, 5.0), h_max);
    } else {
      h *= std::clamp(0.9 * std::pow(norm, -0.2), 0.1, 0.9);
    }
  }
  return x;
}

/// Integrates across a strictly increasing time grid, invoking `sink` with
/// the state at every grid point (including the first).
template <class Rhs, class Sink>
void integrate_on_grid(Rhs&& f, std::span<const double> times, Eigen::VectorXd x,
                       const IntegrateOptions& opts, Sink&& sink) {
  if (times.empty()) return;
  sink(times[0], x);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    x = integrate_rk45(f, times[i], std::move(x), times[i + 1], opts);
    sink(times[i + 1], x);
  }
}

}  // namespace vgf
