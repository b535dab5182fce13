#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vgf/errors.hpp"
#include "vgf/gevrey.hpp"
#include "vgf/jet.hpp"
#include "vgf/material.hpp"

namespace vgf {

// Interface positions closer than this to a crucible end are treated as
// singular geometry; beta -> 0 means the phase has vanished.
constexpr double kGeometryEps = 1e-6;

/// Jets of the flat output: y1 = solid-side interface gradient (K/m),
/// y2 = interface position gamma (m).
struct FlatOutputJets {
  Jet g;
  Jet gamma;
};

/// Derivative orders of the flat output entering the order-N maps.
inline int alpha1(int N) { return N / 2 - 1; }
inline int alpha2(int N) { return N / 2; }
/// Dimension of the flat state chi.
inline int flat_dim(int N) { return alpha1(N) + alpha2(N) + 2; }

/// Power-series coefficients of one phase's temperature profile in the
/// moving frame z_tilde = z - gamma. c[i] is the jet of c_i(t); the profile
/// is sum c_i z_tilde^i / i!.
struct CoefficientSet {
  Phase phase = Phase::Solid;
  int N = 0;          // series order the set was built for
  double gamma = 0.0; // frame origin, needed to place the profile in z
  std::vector<Jet> c;

  int top_index() const { return static_cast<int>(c.size()) - 1; }
};

struct CoefficientPair {
  CoefficientSet solid;
  CoefficientSet liquid;

  const CoefficientSet& operator[](Phase p) const {
    return p == Phase::Solid ? solid : liquid;
  }
};

namespace detail {

inline void run_recursion(CoefficientSet& cs, const Jet& gamma_dot, double alpha, int upto) {
  for (int i = 0; i + 2 <= upto; ++i) {
    if (cs.c[static_cast<std::size_t>(i)].order() < 1) {
      throw InsufficientJetOrder("coefficient recursion exhausted jet orders at index " +
                                 std::to_string(i + 2) + " (" + phase_name(cs.phase) + ")");
    }
    cs.c.push_back((cs.c[static_cast<std::size_t>(i)].derivative() -
                    gamma_dot * cs.c[static_cast<std::size_t>(i + 1)]) /
                   alpha);
  }
}

}  // namespace detail

/// Builds the series coefficients of both phases up to index `upto`
/// (default N) from the flat output jets. The liquid first coefficient
/// comes from the Stefan condition solved for the liquid-side gradient.
inline CoefficientPair coefficients_from_flat(const FlatOutputJets& flat, const MaterialSet& m,
                                              int N, int upto = -1) {
  if (upto < 0) upto = N;
  if (flat.gamma.order() < 1) {
    throw InsufficientJetOrder("gamma jet needs at least one derivative");
  }
  const Jet gamma_dot = flat.gamma.derivative();
  const int c0_order = std::max(flat.g.order(), flat.gamma.order());

  CoefficientPair pair;
  pair.solid.phase = Phase::Solid;
  pair.liquid.phase = Phase::Liquid;
  pair.solid.N = pair.liquid.N = N;
  pair.solid.gamma = pair.liquid.gamma = flat.gamma.value();

  pair.solid.c.reserve(static_cast<std::size_t>(upto) + 1);
  pair.liquid.c.reserve(static_cast<std::size_t>(upto) + 1);

  pair.solid.c.push_back(Jet::constant(m.T_m, c0_order));
  pair.liquid.c.push_back(Jet::constant(m.T_m, c0_order));
  if (upto >= 1) {
    pair.solid.c.push_back(flat.g);
    pair.liquid.c.push_back((m.k_s * flat.g - m.rho_m * m.L_latent * gamma_dot) / m.k_l);
  }
  detail::run_recursion(pair.solid, gamma_dot, m.alpha_s, upto);
  detail::run_recursion(pair.liquid, gamma_dot, m.alpha_l, upto);
  return pair;
}

/// Truncated series value at z_tilde (Horner form over c_i / i!). Uses all
/// stored coefficients unless `upto` limits the index.
inline double eval_profile(const CoefficientSet& cs, double z_tilde, int upto = -1) {
  const int top = (upto < 0) ? cs.top_index() : std::min(upto, cs.top_index());
  double inv_fact = 1.0;
  for (int i = 2; i <= top; ++i) inv_fact /= i;
  double acc = 0.0;
  for (int i = top; i >= 0; --i) {
    acc = cs.c[static_cast<std::size_t>(i)].value() * inv_fact + z_tilde * acc;
    if (i >= 1) inv_fact *= i;
  }
  return acc;
}

/// Spatial derivative of the truncated series at z_tilde.
inline double eval_profile_gradient(const CoefficientSet& cs, double z_tilde, int upto = -1) {
  const int top = (upto < 0) ? cs.top_index() : std::min(upto, cs.top_index());
  if (top < 1) return 0.0;
  double inv_fact = 1.0;
  for (int i = 2; i <= top - 1; ++i) inv_fact /= i;
  double acc = 0.0;
  for (int i = top - 1; i >= 0; --i) {
    acc = cs.c[static_cast<std::size_t>(i + 1)].value() * inv_fact + z_tilde * acc;
    if (i >= 1) inv_fact *= i;
  }
  return acc;
}

/// Signed distance Gamma_phase - gamma of the outer boundary in the moving
/// frame; guards against the interface reaching a crucible end.
inline double shifted_boundary(const MaterialSet& m, Phase p, double gamma) {
  const double zt = m.boundary(p) - gamma;
  if (std::abs(zt) < kGeometryEps) {
    throw SingularGeometry("interface within " + std::to_string(kGeometryEps) + " m of the " +
                           phase_name(p) + " boundary");
  }
  return zt;
}

/// Boundary heat flows that sustain the profile described by the
/// coefficients: u = (k/delta) * dT/dz at the outer boundary.
inline InputPair input_from_coefficients(const CoefficientPair& pair, const MaterialSet& m) {
  InputPair u;
  for (Phase p : {Phase::Solid, Phase::Liquid}) {
    const CoefficientSet& cs = pair[p];
    const double zt = shifted_boundary(m, p, cs.gamma);
    const double grad = eval_profile_gradient(cs, zt);
    const double val = m.k(p) / m.delta(p) * grad;
    (p == Phase::Solid ? u.u_s : u.u_l) = val;
  }
  return u;
}

/// Input map Phi^N: flat output jets -> boundary heat flows.
inline InputPair input_map(const FlatOutputJets& flat, const MaterialSet& m, int N) {
  return input_from_coefficients(coefficients_from_flat(flat, m, N), m);
}

/// Lumped flat state chi = (y1, ..., y1^(a1), y2, ..., y2^(a2)).
struct FlatState {
  int N = 0;
  Eigen::VectorXd chi;

  int dim() const { return static_cast<int>(chi.size()); }
  double y1(int der = 0) const { return chi[der]; }
  double gamma() const { return chi[alpha1(N) + 1]; }
  double gamma_dot() const { return chi[alpha1(N) + 2]; }
  double y2(int der = 0) const { return chi[alpha1(N) + 1 + der]; }
};

inline FlatState validate_flat_state(const FlatState& s, const MaterialSet& m) {
  if (s.dim() != flat_dim(s.N)) {
    throw DimensionMismatch("flat state for N=" + std::to_string(s.N) + " must have " +
                            std::to_string(flat_dim(s.N)) + " components, got " +
                            std::to_string(s.dim()));
  }
  if (!(s.gamma() > m.gamma_s_boundary && s.gamma() < m.gamma_l_boundary)) {
    throw SingularGeometry("flat state gamma outside the crucible interior");
  }
  return s;
}

/// Stacks the flat output jets into the state chi of the order-N model.
inline FlatState flat_state_from_jets(const FlatOutputJets& jets, int N, const MaterialSet& m) {
  const int a1 = alpha1(N);
  const int a2 = alpha2(N);
  if (jets.g.order() < a1 || jets.gamma.order() < a2) {
    throw InsufficientJetOrder("flat output jets carry too few derivatives for chi^N");
  }
  FlatState s;
  s.N = N;
  s.chi.resize(flat_dim(N));
  for (int j = 0; j <= a1; ++j) s.chi[j] = jets.g.d(j);
  for (int j = 0; j <= a2; ++j) s.chi[a1 + 1 + j] = jets.gamma.d(j);
  return validate_flat_state(s, m);
}

/// Flat output jets carried by chi, optionally extended with the next
/// derivatives (top1 = y1^(a1+1), top2 = y2^(a2+1)). Without tops the jets
/// are padded with zeros where the order-N recursion needs one derivative
/// more than chi holds (odd N).
inline FlatOutputJets jets_from_state(const FlatState& s, bool with_tops = false,
                                      double top1 = 0.0, double top2 = 0.0) {
  const int a1 = alpha1(s.N);
  const int a2 = alpha2(s.N);
  const bool odd = (s.N % 2) != 0;
  const int g_order = a1 + ((with_tops || odd) ? 1 : 0);
  const int gamma_order = a2 + ((with_tops || odd) ? 1 : 0);

  Jet g(g_order);
  for (int j = 0; j <= a1; ++j) g.d(j) = s.chi[j];
  Jet gamma(gamma_order);
  for (int j = 0; j <= a2; ++j) gamma.d(j) = s.chi[a1 + 1 + j];
  if (with_tops) {
    g.d(a1 + 1) = top1;
    gamma.d(a2 + 1) = top2;
  }
  return {g, gamma};
}

/// psi_bar^N: flat state -> coefficient sets of order N.
inline CoefficientPair coefficients_from_flatstate(const FlatState& s, const MaterialSet& m) {
  validate_flat_state(s, m);
  return coefficients_from_flat(jets_from_state(s), m, s.N);
}

/// psi^N: coefficient sets -> flat state. Derivatives are read off the
/// coefficient jets (solid c1 carries y1, the Stefan condition carries
/// gamma_dot), so the sets must have been built with sufficient jet orders.
inline FlatState flat_from_coefficients(const CoefficientPair& pair, const MaterialSet& m, int N) {
  const int a1 = alpha1(N);
  const int a2 = alpha2(N);
  if (pair.solid.top_index() < 1 || pair.liquid.top_index() < 1) {
    throw DimensionMismatch("coefficient sets need at least indices 0..1");
  }
  const Jet& cs1 = pair.solid.c[1];
  const Jet& cl1 = pair.liquid.c[1];
  if (cs1.order() < a1) {
    throw InsufficientJetOrder("solid c1 jet carries too few derivatives for psi^N");
  }
  const Jet gamma_dot = (m.k_s * cs1 - m.k_l * cl1) / (m.rho_m * m.L_latent);
  if (gamma_dot.order() < a2 - 1) {
    throw InsufficientJetOrder("coefficient jets carry too few derivatives for psi^N");
  }

  FlatState s;
  s.N = N;
  s.chi.resize(flat_dim(N));
  for (int j = 0; j <= a1; ++j) s.chi[j] = cs1.d(j);
  s.chi[a1 + 1] = pair.solid.gamma;
  for (int j = 1; j <= a2; ++j) s.chi[a1 + 1 + j] = gamma_dot.d(j - 1);
  return validate_flat_state(s, m);
}

/// Appends c_{N+1} obtained from the Neumann boundary condition of each
/// phase (series inserted into k dT/dz(Gamma) = delta u and solved for the
/// highest coefficient):
///   c_{N+1} = N! / Gamma_tilde^N * (delta u / k - sum_{i<N} c_{i+1} Gamma_tilde^i / i!).
inline CoefficientPair extend_coefficients(const FlatState& s, const InputPair& u,
                                           const MaterialSet& m) {
  CoefficientPair pair = coefficients_from_flatstate(s, m);
  const int N = s.N;
  for (Phase p : {Phase::Solid, Phase::Liquid}) {
    CoefficientSet& cs = (p == Phase::Solid) ? pair.solid : pair.liquid;
    const double zt = shifted_boundary(m, p, cs.gamma);
    const double partial = eval_profile_gradient(cs, zt, N);  // uses c_1..c_N
    double nfact = 1.0;
    for (int i = 2; i <= N; ++i) nfact *= i;
    const double c_next =
        nfact / std::pow(zt, N) * (m.delta(p) * u[p] / m.k(p) - partial);
    cs.c.push_back(Jet::constant(c_next, 0));
  }
  return pair;
}

/// Right-hand side of the lumped flat model chi' = f(chi, u).
///
/// The two integrator chains shift; their unknown top derivatives
/// (y1^(a1+1), y2^(a2+1)) are pinned by requiring the order-(N+1) series of
/// both phases to satisfy the Neumann boundary conditions. The residuals are
/// affine in the two unknowns (highest derivatives enter every coefficient
/// linearly), so three probes determine the exact solution.
inline Eigen::VectorXd flat_model_rhs(const FlatState& s, const InputPair& u,
                                      const MaterialSet& m) {
  validate_flat_state(s, m);
  const int N = s.N;
  const int a1 = alpha1(N);
  const int a2 = alpha2(N);

  auto residual = [&](double top1, double top2) -> Eigen::Vector2d {
    const FlatOutputJets jets = jets_from_state(s, true, top1, top2);
    const CoefficientPair pair = coefficients_from_flat(jets, m, N, N + 1);
    Eigen::Vector2d r;
    int row = 0;
    for (Phase p : {Phase::Solid, Phase::Liquid}) {
      const CoefficientSet& cs = pair[p];
      const double zt = shifted_boundary(m, p, cs.gamma);
      r[row++] = eval_profile_gradient(cs, zt) - m.delta(p) * u[p] / m.k(p);
    }
    return r;
  };

  const Eigen::Vector2d r00 = residual(0.0, 0.0);
  Eigen::Matrix2d J;
  J.col(0) = residual(1.0, 0.0) - r00;
  J.col(1) = residual(0.0, 1.0) - r00;
  if (std::abs(J.determinant()) < 1e-300) {
    throw SingularGeometry("flat model extension system is singular");
  }
  const Eigen::Vector2d tops = J.fullPivLu().solve(-r00);

  Eigen::VectorXd rhs(s.dim());
  for (int j = 0; j < a1; ++j) rhs[j] = s.chi[j + 1];
  rhs[a1] = tops[0];
  for (int j = 0; j < a2; ++j) rhs[a1 + 1 + j] = s.chi[a1 + 2 + j];
  rhs[a1 + 1 + a2] = tops[1];
  return rhs;
}

/// Output map of the lumped flat model: boundary temperatures from the
/// order-N series of both phases.
inline SystemOutput flat_output(const FlatState& s, const MaterialSet& m) {
  const CoefficientPair pair = coefficients_from_flatstate(s, m);
  SystemOutput out;
  out.eta_s = eval_profile(pair.solid, shifted_boundary(m, Phase::Solid, pair.solid.gamma));
  out.eta_l = eval_profile(pair.liquid, shifted_boundary(m, Phase::Liquid, pair.liquid.gamma));
  return out;
}

/// Reference trajectory data: flat output transitions plus everything
/// derived from them (profile, gradients, inputs) evaluated on demand from
/// the series. The profile is defined on the extended domain
/// Omega_r = [2 Gamma_s - Gamma_l, 2 Gamma_l - Gamma_s] so that shifted
/// evaluations stay inside it.
class ReferenceProfile {
 public:
  ReferenceProfile() = default;
  ReferenceProfile(MaterialSet m, TransitionSpec grad_spec, TransitionSpec iface_spec, int N,
                   double t_begin, double t_end)
      : m_(std::move(m)),
        grad_spec_(grad_spec),
        iface_spec_(iface_spec),
        N_(N),
        t_begin_(t_begin),
        t_end_(t_end),
        g_order_((N + 1) / 2),
        gamma_order_((N + 1) / 2 + 1) {}

  int order() const { return N_; }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  const MaterialSet& materials() const { return m_; }
  const TransitionSpec& gradient_spec() const { return grad_spec_; }
  const TransitionSpec& interface_spec() const { return iface_spec_; }

  double omega_min() const { return 2.0 * m_.gamma_s_boundary - m_.gamma_l_boundary; }
  double omega_max() const { return 2.0 * m_.gamma_l_boundary - m_.gamma_s_boundary; }
  bool in_domain(double z) const { return z >= omega_min() && z <= omega_max(); }

  FlatOutputJets jets(double t) const { return jets(t, g_order_, gamma_order_); }

  FlatOutputJets jets(double t, int g_order, int gamma_order) const {
    return {transition_jet(t, grad_spec_, g_order),
            transition_jet(t, iface_spec_, gamma_order)};
  }

  CoefficientPair coefficients(double t) const {
    return coefficients_from_flat(jets(t), m_, N_);
  }

  double gamma(double t) const { return transition_jet(t, iface_spec_, 0).value(); }
  double gamma_dot(double t) const { return transition_jet(t, iface_spec_, 1).d(1); }
  Jet gamma_jet(double t, int order) const { return transition_jet(t, iface_spec_, order); }

  InputPair input(double t) const { return input_from_coefficients(coefficients(t), m_); }

  double temperature(Phase p, double z, double t) const {
    return temperature(p, z, t, coefficients(t));
  }
  double gradient(Phase p, double z, double t) const {
    return gradient(p, z, t, coefficients(t));
  }

  // Variants reusing precomputed coefficients; avoids re-deriving the jets
  // when many points are sampled at one time instant.
  double temperature(Phase p, double z, double /*t*/, const CoefficientPair& pair) const {
    require_in_domain(z);
    return eval_profile(pair[p], z - pair[p].gamma);
  }
  double gradient(Phase p, double z, double /*t*/, const CoefficientPair& pair) const {
    require_in_domain(z);
    return eval_profile_gradient(pair[p], z - pair[p].gamma);
  }

 private:
  void require_in_domain(double z) const {
    if (!in_domain(z)) {
      throw ReferenceDomainExceeded("reference profile evaluated at z = " + std::to_string(z) +
                                    " outside [" + std::to_string(omega_min()) + ", " +
                                    std::to_string(omega_max()) + "]");
    }
  }

  MaterialSet m_;
  TransitionSpec grad_spec_;
  TransitionSpec iface_spec_;
  int N_ = 0;
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  int g_order_ = 0;
  int gamma_order_ = 0;
};

/// Plans the reference: validates the transition specs and that the
/// interface path stays strictly inside the crucible.
inline ReferenceProfile plan_reference(const TransitionSpec& grad_spec,
                                       const TransitionSpec& iface_spec, const MaterialSet& m,
                                       int N, double t_begin, double t_end) {
  validate_transition(grad_spec);
  validate_transition(iface_spec);
  for (double g : {iface_spec.y_start, iface_spec.y_end}) {
    if (!(g > m.gamma_s_boundary + kGeometryEps && g < m.gamma_l_boundary - kGeometryEps)) {
      throw PathOutOfDomain("planned interface position " + std::to_string(g) +
                            " leaves the crucible interior");
    }
  }
  if (!(t_end > t_begin)) throw ConsistencyError("reference horizon must have t_end > t_begin");
  return ReferenceProfile(m, grad_spec, iface_spec, N, t_begin, t_end);
}

}  // namespace vgf
