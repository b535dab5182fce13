#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "vgf/errors.hpp"
#include "vgf/fem.hpp"
#include "vgf/flat_series.hpp"
#include "vgf/material.hpp"

namespace vgf {

enum class CollocatedVariant { FixedError, ShiftedError };

/// Boundary feedback gains; positive gains make the boundary terms of the
/// Lyapunov estimate negative.
struct CollocatedConfig {
  double kappa_s = 20.0;  // 1/m
  double kappa_l = 20.0;  // 1/m
  CollocatedVariant variant = CollocatedVariant::FixedError;

  double kappa(Phase p) const { return p == Phase::Solid ? kappa_s : kappa_l; }
};

inline CollocatedConfig validate_collocated(const CollocatedConfig& cfg) {
  if (!(cfg.kappa_s > 0.0) || !(cfg.kappa_l > 0.0)) {
    throw ConsistencyError("collocated gains must be strictly positive");
  }
  return cfg;
}

/// Collocated boundary feedback
///   u = (k/delta) dT_r/dz(Gamma - dgamma, t) - kappa k e(Gamma, t)
/// where the fixed variant compares against the unshifted reference
/// (dgamma = 0 in both the feedforward term and the boundary error).
inline InputPair collocated_control(const SystemOutput& eta, double delta_gamma,
                                    const ReferenceProfile& ref, const CollocatedConfig& cfg,
                                    double t) {
  const double shift = (cfg.variant == CollocatedVariant::ShiftedError) ? delta_gamma : 0.0;
  const MaterialSet& m = ref.materials();
  const CoefficientPair coeffs = ref.coefficients(t);

  InputPair u;
  for (Phase p : {Phase::Solid, Phase::Liquid}) {
    const double arg = m.boundary(p) - shift;
    if (!ref.in_domain(arg)) {
      throw ReferenceDomainExceeded("shifted boundary argument " + std::to_string(arg) +
                                    " leaves the planning domain");
    }
    const double grad_ref = ref.gradient(p, arg, t, coeffs);
    const double err = eta[p] - ref.temperature(p, arg, t, coeffs);
    const double val = m.k(p) / m.delta(p) * grad_ref - cfg.kappa(p) * m.k(p) * err;
    (p == Phase::Solid ? u.u_s : u.u_l) = val;
  }
  return u;
}

enum class FlatVariant { Standard, ModifiedError };

/// Gains of the flat tracking feedback. kappa1/kappa2 place the poles of the
/// decoupled error chains; kappa2_mod drives the velocity error of the
/// no-remelt variant (one chain order lower, no position term).
struct FlatControlConfig {
  int N = 5;
  std::vector<double> kappa1;      // alpha1 + 1 entries
  std::vector<double> kappa2;      // alpha2 + 1 entries
  std::vector<double> kappa2_mod;  // alpha2 entries
  FlatVariant variant = FlatVariant::Standard;
};

/// Roots of s^n + c_{n-1} s^{n-1} + ... + c_0 must lie strictly left of the
/// imaginary axis.
inline bool is_hurwitz(const std::vector<double>& coeffs) {
  const int n = static_cast<int>(coeffs.size());
  if (n == 0) return false;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) companion(i, i + 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(n - 1, i) = -coeffs[static_cast<std::size_t>(i)];
  const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    if (roots[i].real() >= 0.0) return false;
  }
  return true;
}

inline FlatControlConfig validate_flat_control(const FlatControlConfig& cfg) {
  const std::size_t n1 = static_cast<std::size_t>(alpha1(cfg.N)) + 1;
  const std::size_t n2 = static_cast<std::size_t>(alpha2(cfg.N)) + 1;
  if (cfg.kappa1.size() != n1) {
    throw DimensionMismatch("kappa1 needs " + std::to_string(n1) + " entries for N=" +
                            std::to_string(cfg.N));
  }
  if (cfg.kappa2.size() != n2) {
    throw DimensionMismatch("kappa2 needs " + std::to_string(n2) + " entries");
  }
  if (cfg.kappa2_mod.size() != n2 - 1) {
    throw DimensionMismatch("kappa2_mod needs " + std::to_string(n2 - 1) + " entries");
  }
  if (!is_hurwitz(cfg.kappa1)) throw ConsistencyError("kappa1 is not a Hurwitz gain set");
  if (!is_hurwitz(cfg.kappa2)) throw ConsistencyError("kappa2 is not a Hurwitz gain set");
  if (!is_hurwitz(cfg.kappa2_mod)) throw ConsistencyError("kappa2_mod is not a Hurwitz gain set");
  return cfg;
}

/// Gain values used for the simulation study (N = 5 model).
inline FlatControlConfig reference_flat_gains(FlatVariant variant = FlatVariant::Standard) {
  FlatControlConfig cfg;
  cfg.N = 5;
  cfg.kappa1 = {2e-6, 3e-3};
  cfg.kappa2 = {6e-9, 1.1e-5, 6e-3};
  cfg.kappa2_mod = {6e-6, 5e-3};
  cfg.variant = variant;
  return validate_flat_control(cfg);
}

/// Flat tracking feedback: prescribes stable error dynamics on the flat
/// output, extends the state with the resulting virtual inputs and reads the
/// heater powers off the order-(N+1) series boundary conditions.
/// The reference jets must carry alpha1+1 / alpha2+1 derivatives.
inline InputPair flat_control(const FlatState& chi_est, const FlatOutputJets& ref,
                              const FlatControlConfig& cfg, const MaterialSet& m) {
  if (chi_est.N != cfg.N) {
    throw DimensionMismatch("flat state order does not match the controller configuration");
  }
  validate_flat_state(chi_est, m);
  const int a1 = alpha1(cfg.N);
  const int a2 = alpha2(cfg.N);
  if (ref.g.order() < a1 + 1 || ref.gamma.order() < a2 + 1) {
    throw InsufficientJetOrder("reference jets too short for the flat feedback");
  }

  double v1 = ref.g.d(a1 + 1);
  for (int i = 0; i <= a1; ++i) {
    v1 -= cfg.kappa1[static_cast<std::size_t>(i)] * (chi_est.chi[i] - ref.g.d(i));
  }

  double v2 = ref.gamma.d(a2 + 1);
  if (cfg.variant == FlatVariant::Standard) {
    for (int i = 0; i <= a2; ++i) {
      v2 -= cfg.kappa2[static_cast<std::size_t>(i)] *
            (chi_est.chi[a1 + 1 + i] - ref.gamma.d(i));
    }
  } else {
    // velocity-error chain: the position error never enters, so an offset in
    // gamma is tolerated instead of remolten away
    for (int i = 0; i < a2; ++i) {
      v2 -= cfg.kappa2_mod[static_cast<std::size_t>(i)] *
            (chi_est.chi[a1 + 2 + i] - ref.gamma.d(i + 1));
    }
  }

  const FlatOutputJets extended = jets_from_state(chi_est, true, v1, v2);
  const CoefficientPair coeffs = coefficients_from_flat(extended, m, cfg.N, cfg.N + 1);
  return input_from_coefficients(coeffs, m);
}

/// Tracking diagnostics against a reference profile.
struct ErrorDiagnostics {
  double delta_gamma = 0.0;      // m
  double delta_gamma_dot = 0.0;  // m/s
  double V = 0.0;                // K^2 m
  double dist_A = 0.0;           // K m^(1/2), distance to the target set
};

/// Lyapunov candidate V = 1/2 int e~^2 dz with the error shifted per the
/// requested variant, integrated by composite trapezoid on the FEM node
/// images (exact for the piecewise-linear reconstruction split at gamma).
inline ErrorDiagnostics lyapunov_diagnostics(const FemState& state, const FemAssembly& assembly,
                                             const ReferenceProfile& ref, CollocatedVariant variant,
                                             double t) {
  const MaterialSet& m = ref.materials();
  ErrorDiagnostics diag;
  diag.delta_gamma = state.gamma - ref.gamma(t);
  diag.delta_gamma_dot = fem_gamma_dot(state, assembly, m) - ref.gamma_dot(t);
  const double shift = (variant == CollocatedVariant::ShiftedError) ? diag.delta_gamma : 0.0;
  const CoefficientPair coeffs = ref.coefficients(t);

  double V = 0.0;
  const FemBasis& basis = assembly.basis;
  for (Phase p : {Phase::Solid, Phase::Liquid}) {
    const double beta = state.beta(m, p);
    auto nodal = [&](int i) { return i == basis.n_nodes - 1 ? m.T_m : state.w(p)[i]; };
    double acc = 0.0;
    for (int i = 0; i < basis.n_nodes; ++i) {
      const double z = m.boundary(p) + beta * basis.node(i);
      const double e = nodal(i) - ref.temperature(p, z - shift, t, coeffs);
      const double weight = (i == 0 || i == basis.n_nodes - 1) ? 0.5 : 1.0;
      acc += weight * e * e;
    }
    V += 0.5 * std::abs(beta) * basis.dz * acc;
  }
  diag.V = V;
  diag.dist_A = std::sqrt(2.0 * V);
  return diag;
}

}  // namespace vgf
