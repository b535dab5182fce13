#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vgf/jet.hpp"

using namespace vgf;

namespace {

// Smooth composite expression exercising every jet operation; works for
// Jet, double and long double arguments alike.
template <class T>
T composite(const T& t) {
  using std::pow;
  using std::tanh;
  using vgf::pow;
  using vgf::tanh;
  return tanh(0.4 * t + 0.15 * t * t) * pow(1.5 + t * t, 0.7) / (2.0 + t) +
         (1.0 - t) * (0.3 + t * t * t);
}

}  // namespace

TEST_CASE("polynomial jets are exact", "[jet]") {
  const Jet t = Jet::variable(2.0, 4);
  const Jet p = t * t * t;  // t^3
  CHECK(p.d(0) == Catch::Approx(8.0));
  CHECK(p.d(1) == Catch::Approx(12.0));
  CHECK(p.d(2) == Catch::Approx(12.0));
  CHECK(p.d(3) == Catch::Approx(6.0));
  CHECK(p.d(4) == Catch::Approx(0.0));
}

TEST_CASE("division inverts multiplication", "[jet]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Jet a(6), b(6);
    for (int j = 0; j <= 6; ++j) {
      a.d(j) = dist(rng);
      b.d(j) = dist(rng);
    }
    b.d(0) += 2.0;  // keep away from zero
    const Jet q = a / b;
    const Jet back = q * b;
    for (int j = 0; j <= 6; ++j) {
      CHECK(back.d(j) == Catch::Approx(a.d(j)).margin(1e-12));
    }
  }
}

TEST_CASE("jet derivatives match finite differences up to order 6", "[jet]") {
  for (double t0 : {-0.4, 0.1, 0.7}) {
    const Jet value = composite(Jet::variable(t0, 6));
    for (int k = 0; k <= 6; ++k) {
      const long double fd =
          oracle::fd_derivative([](long double x) { return composite(x); },
                                static_cast<long double>(t0), k, 0.01L);
      const double scale = std::max(std::abs(static_cast<double>(fd)), 1e-3);
      CHECK(std::abs(value.d(k) - static_cast<double>(fd)) / scale < 1e-5);
    }
  }
}

TEST_CASE("tanh jet satisfies its defining identity", "[jet]") {
  const Jet x = Jet::variable(0.3, 5) * 1.7;
  const Jet u = tanh(x);
  // u' = (1 - u^2) x', compared order by order
  const Jet lhs = u.derivative();
  const Jet rhs = (1.0 - u * u) * x.derivative();
  for (int j = 0; j <= lhs.order(); ++j) {
    CHECK(lhs.d(j) == Catch::Approx(rhs.d(j)).margin(1e-12));
  }
}

TEST_CASE("pow matches repeated products for integer exponents", "[jet]") {
  const Jet g = 1.2 + Jet::variable(0.4, 5) * Jet::variable(0.4, 5);
  const Jet via_pow = pow(g, 3.0);
  const Jet via_mul = g * g * g;
  for (int j = 0; j <= 5; ++j) {
    CHECK(via_pow.d(j) == Catch::Approx(via_mul.d(j)).epsilon(1e-12));
  }
}

TEST_CASE("differentiating an order-0 jet fails", "[jet]") {
  CHECK_THROWS_AS(Jet::constant(1.0, 0).derivative(), InsufficientJetOrder);
}

TEST_CASE("binary operations truncate to the shorter operand", "[jet]") {
  const Jet a = Jet::variable(1.0, 5);
  const Jet b = Jet::constant(2.0, 2);
  CHECK((a * b).order() == 2);
  CHECK((a + b).order() == 2);
}
