#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "vgf/ode.hpp"

using namespace vgf;

TEST_CASE("linear decay matches the exact solution", "[ode]") {
  auto rhs = [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-0.7 * x); };
  Eigen::VectorXd x0(1);
  x0 << 2.0;
  IntegrateOptions opts;
  opts.rel_tol = 1e-10;
  opts.abs_tol = 1e-12;
  const Eigen::VectorXd x1 = integrate_rk45(rhs, 0.0, x0, 5.0, opts);
  CHECK(x1[0] == Catch::Approx(2.0 * std::exp(-3.5)).epsilon(1e-8));
}

TEST_CASE("tighter tolerances reduce the error", "[ode]") {
  auto rhs = [](double t, const Eigen::VectorXd& x) {
    Eigen::VectorXd d(2);
    d << x[1], -std::sin(x[0]) - 0.1 * x[1] + 0.3 * std::cos(t);
    return d;
  };
  Eigen::VectorXd x0(2);
  x0 << 0.4, 0.0;
  auto run = [&](double tol) {
    IntegrateOptions opts;
    opts.rel_tol = tol;
    opts.abs_tol = tol;
    return integrate_rk45(rhs, 0.0, x0, 30.0, opts);
  };
  const Eigen::VectorXd ref = run(1e-12);
  const double err_loose = (run(1e-5) - ref).norm();
  const double err_tight = (run(1e-8) - ref).norm();
  CHECK(err_tight < err_loose / 4.0);
}

TEST_CASE("grid integration lands on every sample", "[ode]") {
  auto rhs = [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  const std::vector<double> times = {0.0, 0.5, 1.25, 2.0};
  std::vector<double> seen_t;
  std::vector<double> seen_x;
  integrate_on_grid(rhs, times, x0, {}, [&](double t, const Eigen::VectorXd& x) {
    seen_t.push_back(t);
    seen_x.push_back(x[0]);
  });
  REQUIRE(seen_t.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(seen_t[i] == times[i]);
    CHECK(seen_x[i] == Catch::Approx(std::exp(-times[i])).epsilon(1e-6));
  }
}

TEST_CASE("persistent singular geometry aborts the step search", "[ode]") {
  auto rhs = [](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (x[0] >= 0.0) throw SingularGeometry("always singular");
    return x;
  };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(integrate_rk45(rhs, 0.0, x0, 1.0, {}), SingularGeometry);
}

TEST_CASE("unreachable accuracy underflows the step size", "[ode]") {
  // NaN-producing right-hand side: every step is rejected
  auto rhs = [](double, const Eigen::VectorXd& x) {
    Eigen::VectorXd d(1);
    d << std::nan("");
    (void)x;
    return d;
  };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(integrate_rk45(rhs, 0.0, x0, 1.0, {}), StepSizeUnderflow);
}
