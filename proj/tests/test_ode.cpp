#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "pinnode/ode_system.hpp"
#include "oracles.hpp"

using namespace pinnode;
using Catch::Approx;

TEST_CASE("oscillator system definition") {
  const OdeSystem s = make_shm(1.0, std::numbers::pi);
  REQUIRE(s.kind == OdeKind::Shm);
  REQUIRE(s.dim == 2);
  REQUIRE(s.u0 == std::vector<double>{0.0, std::numbers::pi / 2.0});
  REQUIRE(s.forcing.empty());
  REQUIRE(s.ic_weight == 1.0);
  REQUIRE(s.matrix_norm() == 1.0);

  // the exact solution derivative satisfies the residual
  const std::vector<double> u{0.0, std::numbers::pi / 2.0};
  const std::vector<double> ut{-std::numbers::pi / 2.0, 0.0};
  REQUIRE(s.residual(0.0, u, ut) == std::vector<double>{0.0, 0.0});

  const std::vector<double> e1{1.0, 0.0}, zero2{0.0, 0.0}, zero1{0.0};
  const std::vector<double> r = s.residual(0.0, e1, zero2);
  REQUIRE(r == std::vector<double>{0.0, -1.0});

  REQUIRE_THROWS_AS(make_shm(0.0, 1.0), parameter_error);
  REQUIRE_THROWS_AS(make_shm(1.0, 0.0), parameter_error);
  REQUIRE_THROWS_AS(s.residual(0.0, zero1, zero2), config_error);
}

TEST_CASE("heat system assembly at N = 4") {
  const OdeSystem s = make_heat(4, 0.1);
  REQUIRE(s.dim == 4);
  REQUIRE(s.horizon == 0.1);
  REQUIRE(s.diag == -18.0);
  REQUIRE(s.off == 9.0);
  REQUIRE(s.forcing == std::vector<double>{9.0, 0.0, 0.0, 9.0});
  REQUIRE(s.u0[0] == Approx(1.0));
  REQUIRE(s.u0[1] == Approx(1.0 + std::sin(2.0 * std::numbers::pi / 3.0)));
  REQUIRE(s.u0[2] == Approx(1.0 + std::sin(4.0 * std::numbers::pi / 3.0)));
  REQUIRE(s.u0[3] == Approx(1.0));
  REQUIRE(s.ic_weight == Approx(32.56230589874905));

  REQUIRE_THROWS_AS(make_heat(2, 0.1), parameter_error);
  REQUIRE_THROWS_AS(make_heat(4, -1.0), parameter_error);
}

TEST_CASE("the all-ones state is stationary for the heat system") {
  for (int n : {4, 7, 16}) {
    const OdeSystem s = make_heat(n, 0.1);
    std::vector<double> u(static_cast<std::size_t>(n), 1.0), out(static_cast<std::size_t>(n));
    s.rhs(0.0, u, out);
    for (double v : out) REQUIRE(v == 0.0);
  }
}

TEST_CASE("heat eigenvalues and condition number match a dense eigensolver") {
  for (int n : {4, 8, 16}) {
    const auto heat = oracles::dense_heat(n);
    const auto dense = oracles::jacobi_eigenvalues(heat.a, n);
    auto closed = heat_eigenvalues(n);
    std::sort(closed.begin(), closed.end());
    for (int i = 0; i < n; ++i)
      REQUIRE(closed[static_cast<std::size_t>(i)] ==
              Approx(dense[static_cast<std::size_t>(i)]).epsilon(1e-11));
    // kappa = |e_N| / |e_1|: most negative over least negative
    REQUIRE(heat_condition_number(n) == Approx(dense.front() / dense.back()).epsilon(1e-11));
  }
  REQUIRE(heat_eigenvalues(4)[0] == Approx(-3.4376941012509463));
  REQUIRE(heat_eigenvalues(4)[3] == Approx(-32.56230589874905));
  REQUIRE(heat_condition_number(4) == Approx(9.472135954999581));
  REQUIRE_THROWS_AS(heat_eigenvalues(2), parameter_error);
  REQUIRE_THROWS_AS(heat_condition_number(1), parameter_error);
}

TEST_CASE("heat condition number grows with the grid size") {
  double prev = heat_condition_number(3);
  for (int n = 4; n <= 64; ++n) {
    const double k = heat_condition_number(n);
    REQUIRE(k > prev);
    prev = k;
  }
  REQUIRE(heat_condition_number(64) > 1000.0);
}

TEST_CASE("dense matrix agrees with the structured rhs") {
  const int n = 6;
  const auto heat = oracles::dense_heat(n);
  const OdeSystem s = make_heat(n, 0.1);
  REQUIRE(heat.f == s.forcing);
  for (int i = 0; i < n; ++i) REQUIRE(heat.u0[static_cast<std::size_t>(i)] == s.u0[i]);
  std::vector<double> u(n), got(n);
  for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = 0.3 * i - 0.8;
  s.rhs(0.0, u, got);
  for (int i = 0; i < n; ++i) {
    double want = heat.f[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      want += heat.a[static_cast<std::size_t>(i) * n + j] * u[static_cast<std::size_t>(j)];
    REQUIRE(got[static_cast<std::size_t>(i)] == Approx(want).margin(1e-12));
  }
}

TEST_CASE("residual is the derivative mismatch") {
  const OdeSystem s = make_heat(5, 0.1);
  std::vector<double> u(5), ut(5), rhs_u(5);
  for (int i = 0; i < 5; ++i) {
    u[static_cast<std::size_t>(i)] = std::sin(1.0 + i);
    ut[static_cast<std::size_t>(i)] = std::cos(2.0 + i);
  }
  s.rhs(0.0, u, rhs_u);
  const auto r = s.residual(0.0, u, ut);
  for (int i = 0; i < 5; ++i)
    REQUIRE(r[static_cast<std::size_t>(i)] ==
            ut[static_cast<std::size_t>(i)] - rhs_u[static_cast<std::size_t>(i)]);
}

TEST_CASE("residual adjoint is the negative transpose action") {
  // <ubar, x> = -<rbar, A x> for any x, plus udbar = rbar
  for (bool heat : {false, true}) {
    const OdeSystem s = heat ? make_heat(5, 0.1) : make_shm(1.0, 1.0);
    const int n = s.dim;
    std::vector<double> rbar(n), x(n), ubar(n), udbar(n), ax(n);
    for (int i = 0; i < n; ++i) {
      rbar[static_cast<std::size_t>(i)] = std::sin(0.7 * (i + 1));
      x[static_cast<std::size_t>(i)] = std::cos(0.4 * (i + 2));
    }
    s.residual_adjoint_batch(rbar.data(), ubar.data(), udbar.data(), 1);
    REQUIRE(udbar == rbar);
    s.rhs(0.0, x, ax);
    if (!s.forcing.empty())
      for (int i = 0; i < n; ++i) ax[static_cast<std::size_t>(i)] -= s.forcing[static_cast<std::size_t>(i)];
    double lhs = 0.0, rhs_dot = 0.0;
    for (int i = 0; i < n; ++i) {
      lhs += ubar[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      rhs_dot += rbar[static_cast<std::size_t>(i)] * ax[static_cast<std::size_t>(i)];
    }
    REQUIRE(lhs == Approx(-rhs_dot).margin(1e-12));
  }
}

TEST_CASE("benchmark names") {
  REQUIRE(std::string(benchmark_name(OdeKind::Shm)) == "shm");
  REQUIRE(std::string(benchmark_name(OdeKind::Heat)) == "heat");
}
