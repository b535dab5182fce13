#pragma once

#include <cmath>
#include <string>

#include "vgf/errors.hpp"

namespace vgf {

enum class Phase { Solid, Liquid };

inline const char* phase_name(Phase p) {
  return p == Phase::Solid ? "solid" : "liquid";
}

/// Boundary temperatures (T(Gamma_s,t), T(Gamma_l,t)) in K.
struct SystemOutput {
  double eta_s = 0.0;
  double eta_l = 0.0;

  double operator[](Phase p) const { return p == Phase::Solid ? eta_s : eta_l; }
};

/// Heater fluxes (u_s, u_l) in W/m^2.
struct InputPair {
  double u_s = 0.0;
  double u_l = 0.0;

  double operator[](Phase p) const { return p == Phase::Solid ? u_s : u_l; }
  InputPair operator+(const InputPair& o) const { return {u_s + o.u_s, u_l + o.u_l}; }
};

/// Thermophysical constants per phase, geometry and melting data. All SI.
struct MaterialSet {
  double cp_s = 0.0, cp_l = 0.0;        // J/(kg K)
  double k_s = 0.0, k_l = 0.0;          // W/(m K)
  double rho_s = 0.0, rho_l = 0.0;      // kg/m^3
  double rho_m = 0.0;                   // melt density at T_m, kg/m^3
  double alpha_s = 0.0, alpha_l = 0.0;  // m^2/s
  double T_m = 0.0;                     // K
  double L_latent = 0.0;                // J/kg
  double gamma_s_boundary = 0.0;        // m, bottom of crucible
  double gamma_l_boundary = 0.0;        // m, top of crucible

  // Orientation factors of the boundary heat flows. Fixed by the model.
  static constexpr double delta_s = -1.0;
  static constexpr double delta_l = +1.0;

  double cp(Phase p) const { return p == Phase::Solid ? cp_s : cp_l; }
  double k(Phase p) const { return p == Phase::Solid ? k_s : k_l; }
  double rho(Phase p) const { return p == Phase::Solid ? rho_s : rho_l; }
  double alpha(Phase p) const { return p == Phase::Solid ? alpha_s : alpha_l; }
  double delta(Phase p) const { return p == Phase::Solid ? delta_s : delta_l; }
  /// Outer boundary position of the phase (Gamma_s or Gamma_l).
  double boundary(Phase p) const {
    return p == Phase::Solid ? gamma_s_boundary : gamma_l_boundary;
  }
  double domain_length() const { return gamma_l_boundary - gamma_s_boundary; }
};

namespace detail {

inline void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConsistencyError(std::string("material parameter must be strictly positive: ") + name);
  }
}

}  // namespace detail

/// Checks the internal consistency of a material set and returns it unchanged.
/// Diffusivities must match k/(rho*cp) within 1% relative tolerance; the table
/// values are rounded, so exact equality is not required.
inline MaterialSet validate_materials(const MaterialSet& m) {
  detail::check_positive(m.cp_s, "cp_s");
  detail::check_positive(m.cp_l, "cp_l");
  detail::check_positive(m.k_s, "k_s");
  detail::check_positive(m.k_l, "k_l");
  detail::check_positive(m.rho_s, "rho_s");
  detail::check_positive(m.rho_l, "rho_l");
  detail::check_positive(m.rho_m, "rho_m");
  detail::check_positive(m.alpha_s, "alpha_s");
  detail::check_positive(m.alpha_l, "alpha_l");
  detail::check_positive(m.T_m, "T_m");
  detail::check_positive(m.L_latent, "L_latent");

  if (!(m.gamma_s_boundary < m.gamma_l_boundary)) {
    throw ConsistencyError("domain boundaries must satisfy gamma_s_boundary < gamma_l_boundary");
  }

  const double derived_s = m.k_s / (m.rho_s * m.cp_s);
  const double derived_l = m.k_l / (m.rho_l * m.cp_l);
  if (std::abs(m.alpha_s - derived_s) > 0.01 * derived_s) {
    throw ConsistencyError("alpha_s inconsistent with k_s/(rho_s*cp_s): stated " +
                           std::to_string(m.alpha_s) + ", derived " + std::to_string(derived_s));
  }
  if (std::abs(m.alpha_l - derived_l) > 0.01 * derived_l) {
    throw ConsistencyError("alpha_l inconsistent with k_l/(rho_l*cp_l): stated " +
                           std::to_string(m.alpha_l) + ", derived " + std::to_string(derived_l));
  }
  return m;
}

/// GaAs parameter set used throughout the simulations.
inline MaterialSet gaas_materials() {
  MaterialSet m;
  m.cp_s = 423.59;
  m.cp_l = 434.0;
  m.k_s = 7.17;
  m.k_l = 17.8;
  m.rho_s = 5171.24;
  m.rho_l = 5702.37;
  m.rho_m = 5713.07;
  m.alpha_s = 3.27e-6;
  m.alpha_l = 7.19e-6;
  m.T_m = 1511.15;
  m.L_latent = 668.5e3;
  m.gamma_s_boundary = 0.0;
  m.gamma_l_boundary = 0.4;
  return validate_materials(m);
}

}  // namespace vgf
