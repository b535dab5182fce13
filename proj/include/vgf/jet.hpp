#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vgf/errors.hpp"

namespace vgf {

namespace detail {

constexpr int kMaxJetOrder = 23;

// Binomial coefficients for the Leibniz rule; orders stay small.
inline double binom(int n, int k) {
  static const auto table = [] {
    constexpr int N = kMaxJetOrder + 1;
    std::array<std::array<double, N>, N> t{};
    for (int i = 0; i < N; ++i) {
      t[i][0] = t[i][i] = 1.0;
      for (int j = 1; j < i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
    }
    return t;
  }();
  return table[n][k];
}

}  // namespace detail

/// A scalar value together with its time derivatives up to a fixed order.
/// d(j) is the j-th derivative; arithmetic follows the Leibniz and
/// Faa di Bruno rules truncated at the common order of the operands.
/// Storage is inline (orders beyond kMaxJetOrder are rejected), so jets are
/// cheap to copy and never touch the heap.
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order) : size_(order + 1) {
    if (order < 0 || order > detail::kMaxJetOrder) {
      throw DimensionMismatch("jet order out of range: " + std::to_string(order));
    }
    d_.fill(0.0);
  }

  static Jet constant(double value, int order) {
    Jet j(order);
    j.d_[0] = value;
    return j;
  }

  /// The identity function t -> t evaluated at `value` (first derivative 1).
  static Jet variable(double value, int order) {
    Jet j(order);
    j.d_[0] = value;
    if (order >= 1) j.d_[1] = 1.0;
    return j;
  }

  static Jet from_derivatives(const std::vector<double>& derivatives) {
    if (derivatives.empty()) throw DimensionMismatch("jet needs at least the value entry");
    Jet j(static_cast<int>(derivatives.size()) - 1);
    std::copy(derivatives.begin(), derivatives.end(), j.d_.begin());
    return j;
  }

  int order() const { return size_ - 1; }
  double value() const { return d_[0]; }
  double d(int j) const { return d_[static_cast<std::size_t>(j)]; }
  double& d(int j) { return d_[static_cast<std::size_t>(j)]; }

  /// Jet of the time derivative; one order shorter.
  Jet derivative() const {
    if (order() < 1) {
      throw InsufficientJetOrder("cannot differentiate an order-0 jet");
    }
    Jet r(order() - 1);
    for (int j = 0; j <= r.order(); ++j) r.d_[j] = d_[j + 1];
    return r;
  }

  /// Drops derivatives above `ord`.
  Jet truncated(int ord) const {
    Jet r(std::min(ord, order()));
    for (int j = 0; j <= r.order(); ++j) r.d_[j] = d_[j];
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (int j = 0; j < r.size_; ++j) r.d_[j] = -r.d_[j];
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r(std::min(a.order(), b.order()));
    for (int j = 0; j <= r.order(); ++j) r.d_[j] = a.d_[j] + b.d_[j];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r(std::min(a.order(), b.order()));
    for (int j = 0; j <= r.order(); ++j) r.d_[j] = a.d_[j] - b.d_[j];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(std::min(a.order(), b.order()));
    for (int j = 0; j <= r.order(); ++j) {
      double s = 0.0;
      for (int i = 0; i <= j; ++i) s += detail::binom(j, i) * a.d_[i] * b.d_[j - i];
      r.d_[j] = s;
    }
    return r;
  }
  /// Division via the Leibniz rule solved for the quotient derivatives.
  friend Jet operator/(const Jet& a, const Jet& b) {
    if (b.d_[0] == 0.0) throw ConsistencyError("jet division by zero value");
    Jet r(std::min(a.order(), b.order()));
    for (int j = 0; j <= r.order(); ++j) {
      double s = a.d_[j];
      for (int i = 0; i < j; ++i) s -= detail::binom(j, i) * r.d_[i] * b.d_[j - i];
      r.d_[j] = s / b.d_[0];
    }
    return r;
  }

  friend Jet operator+(const Jet& a, double c) {
    Jet r = a;
    r.d_[0] += c;
    return r;
  }
  friend Jet operator+(double c, const Jet& a) { return a + c; }
  friend Jet operator-(const Jet& a, double c) { return a + (-c); }
  friend Jet operator-(double c, const Jet& a) { return (-a) + c; }
  friend Jet operator*(const Jet& a, double c) {
    Jet r = a;
    for (int j = 0; j < r.size_; ++j) r.d_[j] *= c;
    return r;
  }
  friend Jet operator*(double c, const Jet& a) { return a * c; }
  friend Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }

 private:
  std::array<double, detail::kMaxJetOrder + 1> d_{};
  int size_ = 1;
};

/// tanh composed with a jet, propagated through u' = (1 - u^2) x'.
inline Jet tanh(const Jet& x) {
  const int K = x.order();
  Jet u(K);
  u.d(0) = std::tanh(x.value());
  std::array<double, detail::kMaxJetOrder + 1> usq{};  // (u^2)^{(m)}
  usq[0] = u.d(0) * u.d(0);
  for (int j = 0; j < K; ++j) {
    // u^{(j+1)} = sum_m C(j,m) (1-u^2)^{(m)} x^{(j-m+1)}
    double s = 0.0;
    for (int m = 0; m <= j; ++m) {
      const double w = (m == 0) ? (1.0 - usq[0]) : -usq[m];
      s += detail::binom(j, m) * w * x.d(j - m + 1);
    }
    u.d(j + 1) = s;
    // refresh (u^2)^{(m)} up to m = j+1 for the next round
    for (int m = j + 1; m >= 0; --m) {
      double t = 0.0;
      for (int i = 0; i <= m; ++i) t += detail::binom(m, i) * u.d(i) * u.d(m - i);
      usq[m] = t;
    }
  }
  return u;
}

/// Real power g^p for g(t) with nonzero value, via g w' = p w g'.
inline Jet pow(const Jet& g, double p) {
  if (g.value() <= 0.0) {
    throw ConsistencyError("jet pow requires a strictly positive base value");
  }
  const int K = g.order();
  Jet w(K);
  w.d(0) = std::pow(g.value(), p);
  for (int j = 0; j < K; ++j) {
    // g^{(0)} w^{(j+1)} = p sum_m C(j,m) w^{(m)} g^{(j-m+1)}
    //                     - sum_{m>=1} C(j,m) g^{(m)} w^{(j+1-m)}
    double s = 0.0;
    for (int m = 0; m <= j; ++m) s += p * detail::binom(j, m) * w.d(m) * g.d(j - m + 1);
    for (int m = 1; m <= j; ++m) s -= detail::binom(j, m) * g.d(m) * w.d(j + 1 - m);
    w.d(j + 1) = s / g.value();
  }
  return w;
}

inline Jet exp(const Jet& x) {
  const int K = x.order();
  Jet u(K);
  u.d(0) = std::exp(x.value());
  for (int j = 0; j < K; ++j) {
    double s = 0.0;
    for (int m = 0; m <= j; ++m) s += detail::binom(j, m) * u.d(m) * x.d(j - m + 1);
    u.d(j + 1) = s;
  }
  return u;
}

}  // namespace vgf
