#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vgf/errors.hpp"
#include "vgf/material.hpp"
#include "vgf/ode.hpp"

namespace vgf {

/// Piecewise-linear nodal basis on [0,1] with nodes z_i = i / (n_nodes - 1).
/// Node n_nodes-1 sits on the interface and is pinned to T_m; node 0 carries
/// the outer-boundary measurement.
struct FemBasis {
  int n_nodes = 0;
  double dz = 0.0;

  explicit FemBasis(int n) : n_nodes(n), dz(1.0 / (n - 1)) {
    if (n < 3) throw ConsistencyError("FEM basis needs at least 3 nodes");
  }
  double node(int i) const { return i * dz; }
  int free_count() const { return n_nodes - 1; }
};

/// Symmetric tridiagonal storage with a precomputed Thomas factorization.
struct Tridiag {
  Eigen::VectorXd lower;  // A(i+1, i)
  Eigen::VectorXd diag;   // A(i, i)
  Eigen::VectorXd upper;  // A(i, i+1)

  explicit Tridiag(int n = 0)
      : lower(Eigen::VectorXd::Zero(std::max(n - 1, 0))),
        diag(Eigen::VectorXd::Zero(n)),
        upper(Eigen::VectorXd::Zero(std::max(n - 1, 0))) {}

  int size() const { return static_cast<int>(diag.size()); }

  void add(int r, int c, double v) {
    if (r == c) {
      diag[r] += v;
    } else if (c == r + 1) {
      upper[r] += v;
    } else if (c == r - 1) {
      lower[c] += v;
    } else {
      throw DimensionMismatch("entry outside tridiagonal band");
    }
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const int n = size();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += lower[i - 1] * x[i - 1];
      if (i + 1 < n) v += upper[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }

  Eigen::MatrixXd dense() const {
    const int n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = diag[i];
      if (i + 1 < n) {
        m(i, i + 1) = upper[i];
        m(i + 1, i) = lower[i];
      }
    }
    return m;
  }
};

/// Thomas solve with factors computed once (mass matrix is SPD, no pivoting).
struct TridiagSolver {
  Eigen::VectorXd mult;   // elimination multipliers
  Eigen::VectorXd pivot;  // modified diagonal
  Eigen::VectorXd upper;

  static TridiagSolver factor(const Tridiag& a) {
    const int n = a.size();
    TridiagSolver s;
    s.mult.resize(std::max(n - 1, 0));
    s.pivot.resize(n);
    s.upper = a.upper;
    s.pivot[0] = a.diag[0];
    for (int i = 1; i < n; ++i) {
      s.mult[i - 1] = a.lower[i - 1] / s.pivot[i - 1];
      s.pivot[i] = a.diag[i] - s.mult[i - 1] * a.upper[i - 1];
    }
    return s;
  }

  Eigen::VectorXd solve(Eigen::VectorXd d) const {
    const int n = static_cast<int>(pivot.size());
    for (int i = 1; i < n; ++i) d[i] -= mult[i - 1] * d[i - 1];
    d[n - 1] /= pivot[n - 1];
    for (int i = n - 2; i >= 0; --i) d[i] = (d[i] - upper[i] * d[i + 1]) / pivot[i];
    return d;
  }
};

/// Inner products of the hat functions on the unit interval. One assembly
/// serves both phases; the geometry factors beta enter only the dynamics.
struct FemAssembly {
  FemBasis basis{3};
  Tridiag P00;  // <phi_i, phi_k>
  Tridiag P10;  // <z phi_i', phi_k>
  Tridiag P11;  // <phi_i', phi_k'>
  Eigen::VectorXd q10;  // <z phi_N', phi_k>
  Eigen::VectorXd q11;  // <phi_N', phi_k'>
  Eigen::VectorXd phi0;           // phi_k(0)
  double dphi_interface = 0.0;    // phi_N'(1)
  int interface_neighbor = 0;     // row index coupled to the pinned node
  TridiagSolver p00_solver;
};

/// Exact assembly of the hat-function inner products (two-point Gauss per
/// element, exact for the quadratic integrands involved).
inline FemAssembly assemble(const FemBasis& basis) {
  const int n = basis.n_nodes;
  const int nf = basis.free_count();
  const double h = basis.dz;

  FemAssembly a;
  a.basis = basis;
  a.P00 = Tridiag(nf);
  a.P10 = Tridiag(nf);
  a.P11 = Tridiag(nf);
  a.q10 = Eigen::VectorXd::Zero(nf);
  a.q11 = Eigen::VectorXd::Zero(nf);

  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

  for (int e = 0; e < n - 1; ++e) {
    const double z_left = e * h;
    // local shape values/derivatives on the element, nodes (e, e+1)
    for (int loc_i = 0; loc_i < 2; ++loc_i) {
      for (int loc_k = 0; loc_k < 2; ++loc_k) {
        const int gi = e + loc_i;
        const int gk = e + loc_k;
        if (gk >= nf) continue;  // pinned node never appears as test function
        double m00 = 0.0, m10 = 0.0, m11 = 0.0;
        for (double xi : gp) {
          const double z = z_left + xi * h;
          const double vi = (loc_i == 0) ? (1.0 - xi) : xi;
          const double vk = (loc_k == 0) ? (1.0 - xi) : xi;
          const double di = (loc_i == 0) ? (-1.0 / h) : (1.0 / h);
          const double dk = (loc_k == 0) ? (-1.0 / h) : (1.0 / h);
          m00 += 0.5 * h * vi * vk;
          m10 += 0.5 * h * z * di * vk;
          m11 += 0.5 * h * di * dk;
        }
        if (gi < nf) {
          a.P00.add(gk, gi, m00);
          a.P10.add(gk, gi, m10);
          a.P11.add(gk, gi, m11);
        } else {
          a.q10[gk] += m10;
          a.q11[gk] += m11;
        }
      }
    }
  }

  a.phi0 = Eigen::VectorXd::Zero(nf);
  a.phi0[0] = 1.0;
  a.dphi_interface = 1.0 / h;
  a.interface_neighbor = nf - 1;
  a.p00_solver = TridiagSolver::factor(a.P00);
  return a;
}

/// Free nodal weights of both immobilized phases plus the interface position.
struct FemState {
  Eigen::VectorXd w_s;
  Eigen::VectorXd w_l;
  double gamma = 0.0;

  double beta(const MaterialSet& m, Phase p) const { return gamma - m.boundary(p); }

  const Eigen::VectorXd& w(Phase p) const { return p == Phase::Solid ? w_s : w_l; }

  Eigen::VectorXd pack() const {
    Eigen::VectorXd x(w_s.size() + w_l.size() + 1);
    x << w_s, w_l, gamma;
    return x;
  }
  static FemState unpack(const Eigen::VectorXd& x, int nf) {
    FemState s;
    s.w_s = x.segment(0, nf);
    s.w_l = x.segment(nf, nf);
    s.gamma = x[2 * nf];
    return s;
  }
};

struct FemDerivative {
  Eigen::VectorXd wdot_s;
  Eigen::VectorXd wdot_l;
  double gamma_dot = 0.0;
};

namespace detail {

inline double checked_beta(const FemState& s, const MaterialSet& m, Phase p) {
  const double b = s.beta(m, p);
  if (std::abs(b) < 1e-6) {
    throw SingularGeometry("interface reached the " + std::string(phase_name(p)) +
                           " boundary (beta = " + std::to_string(b) + ")");
  }
  return b;
}

}  // namespace detail

/// Interface gradient of the immobilized profile, d/dz_bar T(1,t).
inline double interface_gradient(const FemAssembly& a, const Eigen::VectorXd& w, double T_m) {
  return (T_m - w[a.interface_neighbor]) * a.dphi_interface;
}

/// Growth rate from the discrete Stefan condition; needs no input.
inline double fem_gamma_dot(const FemState& s, const FemAssembly& a, const MaterialSet& m) {
  const double beta_s = detail::checked_beta(s, m, Phase::Solid);
  const double beta_l = detail::checked_beta(s, m, Phase::Liquid);
  const double flux_s = m.k_s / beta_s * interface_gradient(a, s.w_s, m.T_m);
  const double flux_l = m.k_l / beta_l * interface_gradient(a, s.w_l, m.T_m);
  return (flux_s - flux_l) / (m.L_latent * m.rho_m);
}

/// Semi-discrete dynamics on immobilized coordinates: Galerkin equations for
/// the free weights plus the discrete Stefan condition.
inline FemDerivative fem_rhs(const FemState& s, const InputPair& u, const FemAssembly& a,
                             const MaterialSet& m) {
  FemDerivative d;
  d.gamma_dot = fem_gamma_dot(s, a, m);
  for (Phase p : {Phase::Solid, Phase::Liquid}) {
    const double beta = detail::checked_beta(s, m, p);
    const Eigen::VectorXd& w = s.w(p);

    Eigen::VectorXd diff = a.P11.apply(w) + a.q11 * m.T_m;
    diff += (m.delta(p) / m.k(p) * beta * u[p]) * a.phi0;
    Eigen::VectorXd adv = a.P10.apply(w) + a.q10 * m.T_m;

    Eigen::VectorXd wdot = -(m.alpha(p) / (beta * beta)) * a.p00_solver.solve(std::move(diff)) +
                           (d.gamma_dot / beta) * a.p00_solver.solve(std::move(adv));
    (p == Phase::Solid ? d.wdot_s : d.wdot_l) = std::move(wdot);
  }
  return d;
}

/// Nodal interpolation of per-phase initial profiles given in physical
/// coordinates. The profiles must meet T_m at the interface.
inline FemState project_initial(const std::function<double(double)>& profile_s,
                                const std::function<double(double)>& profile_l,
                                const FemBasis& basis, const MaterialSet& m, double gamma0) {
  FemState s;
  s.gamma = gamma0;
  detail::checked_beta(s, m, Phase::Solid);
  detail::checked_beta(s, m, Phase::Liquid);
  for (Phase p : {Phase::Solid, Phase::Liquid}) {
    const auto& profile = (p == Phase::Solid) ? profile_s : profile_l;
    const double at_interface = profile(gamma0);
    if (std::abs(at_interface - m.T_m) > 1e-6) {
      throw InterfaceMismatch("initial " + std::string(phase_name(p)) + " profile is " +
                              std::to_string(at_interface - m.T_m) + " K off T_m at the interface");
    }
    const double beta = s.beta(m, p);
    Eigen::VectorXd w(basis.free_count());
    for (int i = 0; i < basis.free_count(); ++i) {
      w[i] = profile(m.boundary(p) + beta * basis.node(i));
    }
    (p == Phase::Solid ? s.w_s : s.w_l) = std::move(w);
  }
  return s;
}

/// Boundary temperatures; nodal basis makes them plain weight reads.
inline SystemOutput fem_measure(const FemState& s) {
  return {s.w_s[0], s.w_l[0]};
}

/// Temperature at physical position z by mapping through the immobilization
/// transform and interpolating the nodal values.
inline double fem_reconstruct(const FemState& s, const FemBasis& basis, const MaterialSet& m,
                              double z) {
  if (z < m.gamma_s_boundary || z > m.gamma_l_boundary) {
    throw OutOfDomain("reconstruction point outside the crucible");
  }
  const Phase p = (z <= s.gamma) ? Phase::Solid : Phase::Liquid;
  const double beta = s.beta(m, p);
  double zb = (z - m.boundary(p)) / beta;
  zb = std::clamp(zb, 0.0, 1.0);
  const double pos = zb / basis.dz;
  const int cell = std::min(static_cast<int>(pos), basis.n_nodes - 2);
  const double frac = pos - cell;
  auto nodal = [&](int i) {
    return (i == basis.n_nodes - 1) ? m.T_m : s.w(p)[i];
  };
  return (1.0 - frac) * nodal(cell) + frac * nodal(cell + 1);
}

/// One sampled trajectory point.
struct FemSample {
  double t = 0.0;
  FemState state;
};

/// Integrates the semi-discretization with adaptive Runge-Kutta, sampling the
/// state on the given time grid. Throws SingularGeometry if the interface
/// reaches a crucible end, StepSizeUnderflow if no acceptable step exists.
template <class Controls>
std::vector<FemSample> fem_integrate(const FemState& state0, Controls&& controls,
                                     std::span<const double> times, const FemAssembly& a,
                                     const MaterialSet& m, const IntegrateOptions& opts = {}) {
  const int nf = a.basis.free_count();
  auto rhs = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const FemState s = FemState::unpack(x, nf);
    const FemDerivative d = fem_rhs(s, controls(t), a, m);
    Eigen::VectorXd dx(x.size());
    dx << d.wdot_s, d.wdot_l, d.gamma_dot;
    return dx;
  };
  std::vector<FemSample> out;
  out.reserve(times.size());
  integrate_on_grid(rhs, times, state0.pack(), opts, [&](double t, const Eigen::VectorXd& x) {
    out.push_back({t, FemState::unpack(x, nf)});
  });
  return out;
}

namespace detail {

inline double trapezoid_unit(const Eigen::VectorXd& free_nodes, double pinned, double dz) {
  double acc = 0.5 * free_nodes[0];
  for (Eigen::Index i = 1; i < free_nodes.size(); ++i) acc += free_nodes[i];
  acc += 0.5 * pinned;
  return acc * dz;
}

}  // namespace detail

/// Defect of the exact global energy balance evaluated on the discrete
/// solution: d/dt of the sensible heat minus boundary heat flows, latent
/// heat release and the sensible-heat exchange of the moving interface.
/// Zero in the continuum; the discrete value measures the approximation
/// error of the scheme.
template <class Controls>
std::vector<double> enthalpy_balance(std::span<const FemSample> trajectory, Controls&& controls,
                                     const FemAssembly& a, const MaterialSet& m) {
  std::vector<double> residuals;
  residuals.reserve(trajectory.size());
  const double dz = a.basis.dz;
  for (const FemSample& sample : trajectory) {
    const InputPair u = controls(sample.t);
    const FemState& s = sample.state;
    const FemDerivative d = fem_rhs(s, u, a, m);

    const double beta_s = s.beta(m, Phase::Solid);        // > 0
    const double len_l = -s.beta(m, Phase::Liquid);       // > 0
    const double I_s = detail::trapezoid_unit(s.w_s, m.T_m, dz);
    const double I_l = detail::trapezoid_unit(s.w_l, m.T_m, dz);
    const double Idot_s = detail::trapezoid_unit(d.wdot_s, 0.0, dz);
    const double Idot_l = detail::trapezoid_unit(d.wdot_l, 0.0, dz);

    const double H_dot = m.rho_s * m.cp_s * (d.gamma_dot * I_s + beta_s * Idot_s) +
                         m.rho_l * m.cp_l * (-d.gamma_dot * I_l + len_l * Idot_l);
    const double residual = H_dot - u.u_s - u.u_l - m.rho_m * m.L_latent * d.gamma_dot -
                            (m.rho_s * m.cp_s - m.rho_l * m.cp_l) * m.T_m * d.gamma_dot;
    residuals.push_back(residual);
  }
  return residuals;
}

}  // namespace vgf
