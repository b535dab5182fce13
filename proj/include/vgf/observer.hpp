#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vgf/errors.hpp"
#include "vgf/flat_series.hpp"
#include "vgf/material.hpp"
#include "vgf/ode.hpp"

namespace vgf {

/// Weights and scaling of the time-varying optimal estimator. All matrices
/// act on the scaled state T chi; the components of chi span many orders of
/// magnitude, so the scaling is essential for the finite differences and the
/// Riccati solve alike.
struct ObserverConfig {
  int N = 5;
  Eigen::Matrix2d Q = 1e-4 * Eigen::Matrix2d::Identity();  // output weight
  Eigen::Matrix2d R = 1e-4 * Eigen::Matrix2d::Identity();  // input-disturbance weight
  Eigen::MatrixXd S;                                       // initial-error weight, M x M
  Eigen::VectorXd scaling;                                 // diagonal of T^N
  double fd_step = 1e-6;                                   // relative finite-difference step
  double pi_norm_bound = 1e12;
  double est_rel_tol = 1e-9;
  double est_abs_tol = 1e-9;
};

/// Defaults matching the simulation study: S = 1e-3 I and, for the order-5
/// model, the scaling diag(1e-3, 1e-3, 1e7, 1e10, 1e13).
inline ObserverConfig default_observer_config(int N = 5) {
  ObserverConfig cfg;
  cfg.N = N;
  const int M = flat_dim(N);
  cfg.S = 1e-3 * Eigen::MatrixXd::Identity(M, M);
  if (N == 5) {
    cfg.scaling.resize(5);
    cfg.scaling << 1e-3, 1e-3, 1e7, 1e10, 1e13;
  } else {
    cfg.scaling = Eigen::VectorXd::Ones(M);
  }
  return cfg;
}

namespace detail {

inline void require_spd(const Eigen::MatrixXd& m, const char* name) {
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm())) {
    throw ConsistencyError(std::string(name) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConsistencyError(std::string(name) + " must be positive definite");
  }
}

}  // namespace detail

inline ObserverConfig validate_observer_config(const ObserverConfig& cfg) {
  const int M = flat_dim(cfg.N);
  if (cfg.S.rows() != M || cfg.S.cols() != M) {
    throw DimensionMismatch("S must be " + std::to_string(M) + "x" + std::to_string(M));
  }
  if (cfg.scaling.size() != M) {
    throw DimensionMismatch("scaling needs " + std::to_string(M) + " diagonal entries");
  }
  if ((cfg.scaling.array() <= 0.0).any()) {
    throw ConsistencyError("scaling entries must be positive");
  }
  detail::require_spd(cfg.Q, "Q");
  detail::require_spd(cfg.R, "R");
  detail::require_spd(cfg.S, "S");
  if (!(cfg.fd_step > 0.0)) throw ConsistencyError("fd_step must be positive");
  return cfg;
}

/// Jacobians of the flat model along a reference point, in unscaled
/// coordinates (A = df/dchi, B = df/du, C = dh/dchi).
struct Linearization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
};

/// Central finite differences of the flat model, probed in scaled
/// coordinates (step fd_step relative to each scaled component), then
/// transformed back.
inline Linearization linearize(const FlatState& chi_ref, const InputPair& u_ref,
                               const ObserverConfig& cfg, const MaterialSet& m) {
  const int M = flat_dim(cfg.N);
  const Eigen::VectorXd& sc = cfg.scaling;
  const Eigen::VectorXd chi_sc = sc.asDiagonal() * chi_ref.chi;

  auto f_scaled = [&](const Eigen::VectorXd& xs, const InputPair& u) -> Eigen::VectorXd {
    FlatState s;
    s.N = cfg.N;
    s.chi = sc.cwiseInverse().asDiagonal() * xs;
    return sc.asDiagonal() * flat_model_rhs(s, u, m);
  };
  auto h_scaled = [&](const Eigen::VectorXd& xs) -> Eigen::Vector2d {
    FlatState s;
    s.N = cfg.N;
    s.chi = sc.cwiseInverse().asDiagonal() * xs;
    const SystemOutput out = flat_output(s, m);
    return {out.eta_s, out.eta_l};
  };

  Eigen::MatrixXd A_sc(M, M), C_sc(2, M);
  for (int j = 0; j < M; ++j) {
    const double h = cfg.fd_step * std::max(1.0, std::abs(chi_sc[j]));
    Eigen::VectorXd plus = chi_sc, minus = chi_sc;
    plus[j] += h;
    minus[j] -= h;
    A_sc.col(j) = (f_scaled(plus, u_ref) - f_scaled(minus, u_ref)) / (2.0 * h);
    C_sc.col(j) = (h_scaled(plus) - h_scaled(minus)) / (2.0 * h);
  }

  Eigen::MatrixXd B_sc(M, 2);
  for (int j = 0; j < 2; ++j) {
    const double base = (j == 0) ? u_ref.u_s : u_ref.u_l;
    const double h = cfg.fd_step * std::max(1.0, std::abs(base));
    InputPair plus = u_ref, minus = u_ref;
    (j == 0 ? plus.u_s : plus.u_l) += h;
    (j == 0 ? minus.u_s : minus.u_l) -= h;
    B_sc.col(j) = (f_scaled(sc.asDiagonal() * chi_ref.chi, plus) -
                   f_scaled(sc.asDiagonal() * chi_ref.chi, minus)) /
                  (2.0 * h);
  }

  Linearization lin;
  lin.A = sc.cwiseInverse().asDiagonal() * A_sc * sc.asDiagonal();
  lin.B = sc.cwiseInverse().asDiagonal() * B_sc;
  lin.C = C_sc * sc.asDiagonal();
  return lin;
}

/// Time-sampled solution of the filter Riccati equation with the matched
/// gains L = -Pi C^T Q. Stored in scaled coordinates.
struct GainSchedule {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> Pi;
  std::vector<Eigen::MatrixXd> L;

  Eigen::MatrixXd gain_at(double t) const {
    if (times.empty()) throw ConsistencyError("empty gain schedule");
    if (t <= times.front()) return L.front();
    if (t >= times.back()) return L.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - w) * L[lo] + w * L[hi];
  }
};

/// Integrates Pi' = Pi A^T + A Pi - Pi C^T Q C Pi + B R^-1 B^T forward from
/// Pi(0) = S^-1 and stores (Pi, L) on the sample grid. `lin_scaled` supplies
/// the scaled Jacobians at arbitrary times. The early transient is stiff
/// (|Pi'| ~ |Pi|^2 |C^T Q C|), so the integration is adaptive between grid
/// points; Pi is symmetrized at every stored sample.
template <class LinFn>
GainSchedule solve_frde_core(LinFn&& lin_scaled, const Eigen::MatrixXd& S,
                             const Eigen::Matrix2d& Q, const Eigen::Matrix2d& R, double t0,
                             double t1, double dt, double pi_norm_bound) {
  const int M = static_cast<int>(S.rows());
  const Eigen::Matrix2d R_inv = R.inverse();
  const int steps = static_cast<int>(std::llround((t1 - t0) / dt));

  // Jacobians evaluated once per grid point; the reference varies on the
  // process timescale, so linear interpolation between samples is exact
  // enough while the stiff Pi transient is resolved adaptively.
  std::vector<Linearization> lins;
  lins.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    lins.push_back(lin_scaled(t0 + i * dt));
  }
  auto lin_at = [&](double t) -> Linearization {
    const double pos = std::clamp((t - t0) / dt, 0.0, static_cast<double>(steps));
    const int lo = std::min(static_cast<int>(pos), steps - 1);
    const double w = pos - lo;
    const auto& a = lins[static_cast<std::size_t>(lo)];
    const auto& b = lins[static_cast<std::size_t>(lo) + 1];
    return {(1.0 - w) * a.A + w * b.A, (1.0 - w) * a.B + w * b.B, (1.0 - w) * a.C + w * b.C};
  };

  auto rhs = [&](double t, const Eigen::VectorXd& packed) -> Eigen::VectorXd {
    const Eigen::Map<const Eigen::MatrixXd> Pi(packed.data(), M, M);
    const Linearization lin = lin_at(t);
    const Eigen::MatrixXd CtQC = lin.C.transpose() * Q * lin.C;
    Eigen::MatrixXd dPi = Pi * lin.A.transpose() + lin.A * Pi - Pi * CtQC * Pi +
                          lin.B * R_inv * lin.B.transpose();
    return Eigen::Map<Eigen::VectorXd>(dPi.data(), M * M);
  };

  GainSchedule sched;
  Eigen::MatrixXd Pi = S.inverse();

  IntegrateOptions opts;
  opts.rel_tol = 1e-8;
  opts.abs_tol = 1e-10;

  auto store = [&](double t, const Linearization& lin) {
    Pi = 0.5 * (Pi + Pi.transpose()).eval();
    if (!Pi.allFinite() || Pi.norm() > pi_norm_bound) {
      throw RiccatiBlowup("Riccati covariance exceeded its bound at t = " + std::to_string(t));
    }
    sched.times.push_back(t);
    sched.Pi.push_back(Pi);
    sched.L.push_back(-Pi * lin.C.transpose() * Q);
  };

  store(t0, lins.front());
  Eigen::VectorXd packed = Eigen::Map<Eigen::VectorXd>(Pi.data(), M * M);
  for (int i = 1; i <= steps; ++i) {
    const double ta = t0 + (i - 1) * dt;
    const double tb = (i == steps) ? t1 : t0 + i * dt;
    packed = integrate_rk45(rhs, ta, std::move(packed), tb, opts);
    Pi = Eigen::Map<Eigen::MatrixXd>(packed.data(), M, M);
    store(tb, lins[static_cast<std::size_t>(i)]);
    packed = Eigen::Map<Eigen::VectorXd>(Pi.data(), M * M);
  }
  return sched;
}

/// Reference flat state of the order-N lumped model at time t.
inline FlatState reference_flat_state(const ReferenceProfile& ref, double t, int N) {
  const FlatOutputJets jets = ref.jets(t, alpha1(N) + 1, alpha2(N) + 1);
  return flat_state_from_jets(jets, N, ref.materials());
}

/// Input consistent with the order-N lumped model along the reference (the
/// flat feedback with zero tracking error).
inline InputPair reference_model_input(const ReferenceProfile& ref, double t, int N) {
  const FlatOutputJets jets = ref.jets(t, alpha1(N) + 1, alpha2(N) + 1);
  const CoefficientPair coeffs = coefficients_from_flat(jets, ref.materials(), N, N + 1);
  return input_from_coefficients(coeffs, ref.materials());
}

/// Linearizes along the reference trajectory and solves the FRDE on
/// [t0, t1] with sample spacing dt.
inline GainSchedule solve_frde(const ReferenceProfile& ref, const ObserverConfig& cfg, double t0,
                               double t1, double dt) {
  validate_observer_config(cfg);
  const MaterialSet& m = ref.materials();
  const Eigen::VectorXd& sc = cfg.scaling;

  auto lin_scaled = [&, sc](double t) -> Linearization {
    const FlatState chi_r = reference_flat_state(ref, t, cfg.N);
    const InputPair u_r = reference_model_input(ref, t, cfg.N);
    Linearization lin = linearize(chi_r, u_r, cfg, m);
    lin.A = sc.asDiagonal() * lin.A * sc.cwiseInverse().asDiagonal();
    lin.B = sc.asDiagonal() * lin.B;
    lin.C = lin.C * sc.cwiseInverse().asDiagonal();
    return lin;
  };
  return solve_frde_core(lin_scaled, cfg.S, cfg.Q, cfg.R, t0, t1, dt, cfg.pi_norm_bound);
}

/// One estimator step: integrates the observer copy
///   chi_hat' = f(chi_hat, u) + L(t) (h(chi_hat) - eta_meas)
/// over [t, t + dt] in scaled coordinates with the scheduled gain linearly
/// interpolated in time.
inline FlatState estimate_step(const FlatState& chi_hat, const InputPair& u,
                               const SystemOutput& eta_meas, const GainSchedule& sched,
                               const ObserverConfig& cfg, const MaterialSet& m, double t,
                               double dt) {
  if (!(dt > 0.0)) throw ConsistencyError("estimate_step needs dt > 0");
  const Eigen::VectorXd& sc = cfg.scaling;
  const Eigen::Vector2d eta(eta_meas.eta_s, eta_meas.eta_l);

  auto rhs = [&](double tau, const Eigen::VectorXd& xs) -> Eigen::VectorXd {
    FlatState s;
    s.N = cfg.N;
    s.chi = sc.cwiseInverse().asDiagonal() * xs;
    const SystemOutput out = flat_output(s, m);
    const Eigen::Vector2d innovation(out.eta_s - eta[0], out.eta_l - eta[1]);
    return sc.asDiagonal() * flat_model_rhs(s, u, m) + sched.gain_at(tau) * innovation;
  };

  IntegrateOptions opts;
  opts.rel_tol = cfg.est_rel_tol;
  opts.abs_tol = cfg.est_abs_tol;
  Eigen::VectorXd xs = sc.asDiagonal() * chi_hat.chi;
  xs = integrate_rk45(rhs, t, std::move(xs), t + dt, opts);

  FlatState out;
  out.N = cfg.N;
  out.chi = sc.cwiseInverse().asDiagonal() * xs;
  return out;
}

/// Writes the schedule as decimal text with 17 significant digits; the
/// round-trip through read_gain_schedule is bit exact.
inline void write_gain_schedule(std::ostream& os, const GainSchedule& sched) {
  if (sched.times.empty()) throw IoError("cannot export an empty gain schedule");
  const int M = static_cast<int>(sched.Pi.front().rows());
  os << "# riccati gain schedule, M=" << M << "\n";
  os << "t";
  for (int r = 0; r < M; ++r)
    for (int c = 0; c < M; ++c) os << ",Pi_" << r << "_" << c;
  for (int r = 0; r < M; ++r)
    for (int c = 0; c < 2; ++c) os << ",L_" << r << "_" << c;
  os << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (std::size_t i = 0; i < sched.times.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", sched.times[i]);
    os << buf;
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < M; ++c) put(sched.Pi[i](r, c));
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < 2; ++c) put(sched.L[i](r, c));
    os << "\n";
  }
}

inline GainSchedule read_gain_schedule(std::istream& is) {
  GainSchedule sched;
  std::string line;
  int M = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') {
      const auto pos = line.find("M=");
      if (pos != std::string::npos) M = std::stoi(line.substr(pos + 2));
      continue;
    }
    if (line.rfind("t,", 0) == 0 || line == "t") continue;  // header row
    if (M < 0) throw IoError("gain schedule file lacks the dimension comment");
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (static_cast<int>(values.size()) != 1 + M * M + 2 * M) {
      throw IoError("gain schedule row has the wrong number of columns");
    }
    sched.times.push_back(values[0]);
    Eigen::MatrixXd Pi(M, M), L(M, 2);
    int idx = 1;
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < M; ++c) Pi(r, c) = values[static_cast<std::size_t>(idx++)];
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < 2; ++c) L(r, c) = values[static_cast<std::size_t>(idx++)];
    sched.Pi.push_back(std::move(Pi));
    sched.L.push_back(std::move(L));
  }
  if (sched.times.empty()) throw IoError("gain schedule file contained no samples");
  return sched;
}

}  // namespace vgf
