#pragma once

#include <cmath>

#include "vgf/errors.hpp"
#include "vgf/jet.hpp"

namespace vgf {

/// Rest-to-rest transition y_A -> y_B over duration theta with Gevrey shape
/// parameter sigma (Gevrey order 1 + 1/sigma, which must stay <= 2 for the
/// series parametrization to converge).
struct TransitionSpec {
  double y_start = 0.0;
  double y_end = 0.0;
  double theta = 1.0;  // s
  double sigma = 1.1;

  double gevrey_order() const { return 1.0 + 1.0 / sigma; }
};

inline TransitionSpec validate_transition(const TransitionSpec& s) {
  if (!(s.theta > 0.0)) throw ConsistencyError("transition time theta must be positive");
  if (!(s.sigma >= 1.0)) throw ConsistencyError("Gevrey shape parameter sigma must be >= 1");
  return s;
}

/// Smooth step phi(tau) = (1 + tanh(2(2 tau - 1) / (4 tau (1 - tau))^sigma)) / 2
/// together with its first K tau-derivatives. Outside (0,1) the function is
/// exactly constant, so the clamped endpoint jets are returned; the clamp
/// width guards the divergent tanh argument near the endpoints.
inline Jet phi_jet(double tau, int K, double sigma = 1.1) {
  constexpr double kEdge = 1e-9;
  if (tau <= kEdge) return Jet::constant(0.0, K);
  if (tau >= 1.0 - kEdge) return Jet::constant(1.0, K);

  const Jet t = Jet::variable(tau, K);
  const Jet arg = 2.0 * (2.0 * t - 1.0) * pow(4.0 * t * (1.0 - t), -sigma);
  return 0.5 * (1.0 + tanh(arg));
}

/// y(t) = y_A + (y_B - y_A) phi(t / theta) as a jet in t (chain rule applied).
inline Jet transition_jet(double t, const TransitionSpec& spec, int K) {
  const Jet p = phi_jet(t / spec.theta, K, spec.sigma);
  Jet y(K);
  const double span = spec.y_end - spec.y_start;
  y.d(0) = spec.y_start + span * p.d(0);
  double scale = 1.0;
  for (int j = 1; j <= K; ++j) {
    scale /= spec.theta;
    y.d(j) = span * p.d(j) * scale;
  }
  return y;
}

}  // namespace vgf
