#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pinnode/autodiff.hpp"
#include "pinnode/dual.hpp"
#include "pinnode/network.hpp"
#include "pinnode/param_vector.hpp"
#include "oracles.hpp"

using namespace pinnode;
using Catch::Approx;

TEST_CASE("dual arithmetic propagates tangents") {
  const DualScalar x{2.0, 1.0};  // seed d/dx
  const DualScalar y{3.0, 0.0};

  REQUIRE((x + y).value == 5.0);
  REQUIRE((x + y).tangent == 1.0);
  REQUIRE((x - y).tangent == 1.0);
  REQUIRE((y - x).tangent == -1.0);
  REQUIRE((x * y).value == 6.0);
  REQUIRE((x * y).tangent == 3.0);  // y + x * 0
  REQUIRE((x / y).value == Approx(2.0 / 3.0));
  REQUIRE((x / y).tangent == Approx(1.0 / 3.0));
  REQUIRE((-x).tangent == -1.0);
  REQUIRE((+x).value == 2.0);

  // mixed scalar ops
  REQUIRE((x + 1.0).value == 3.0);
  REQUIRE((1.0 + x).tangent == 1.0);
  REQUIRE((x * 4.0).tangent == 4.0);
  REQUIRE((4.0 * x).tangent == 4.0);
  REQUIRE((x - 1.0).tangent == 1.0);
  REQUIRE((1.0 - x).tangent == -1.0);
  REQUIRE((x / 2.0).tangent == 0.5);
  // d(1/x) = -1/x^2
  REQUIRE((1.0 / x).tangent == Approx(-0.25));

  DualScalar z = x;
  z += 1.0;
  z *= 2.0;
  REQUIRE(z.value == 6.0);
  REQUIRE(z.tangent == 2.0);

  REQUIRE(x == DualScalar{2.0, 1.0});
  REQUIRE(!(x == y));
  REQUIRE(scalar_value(x) == 2.0);
  REQUIRE(scalar_value(1.25) == 1.25);
}

TEST_CASE("dual math functions match analytic derivatives") {
  const double v = 0.7;
  const DualScalar x{v, 1.0};

  const auto th = tanh(x);
  REQUIRE(th.value == Approx(std::tanh(v)));
  REQUIRE(th.tangent == Approx(1.0 - std::tanh(v) * std::tanh(v)));

  REQUIRE(exp(x).tangent == Approx(std::exp(v)));
  REQUIRE(sin(x).tangent == Approx(std::cos(v)));
  REQUIRE(cos(x).tangent == Approx(-std::sin(v)));
  REQUIRE(sqrt(x).tangent == Approx(0.5 / std::sqrt(v)));

  REQUIRE(isfinite(x));
  REQUIRE(!isfinite(DualScalar{std::nan(""), 0.0}));
  REQUIRE(!isfinite(DualScalar{1.0, std::numeric_limits<double>::infinity()}));
}

TEST_CASE("dual composite expression differentiates correctly") {
  // f(x) = tanh(x) * x + sin(x) / x, f'(x) by hand
  auto f = [](auto x) { return tanh(x) * x + sin(x) / x; };
  const double v = 1.3;
  const DualScalar r = f(DualScalar{v, 1.0});
  const double t = std::tanh(v);
  const double want = (1.0 - t * t) * v + t + (std::cos(v) * v - std::sin(v)) / (v * v);
  REQUIRE(r.value == Approx(f(v)));
  REQUIRE(r.tangent == Approx(want));
}

TEST_CASE("param vector layout and block round trip") {
  NetworkConfig cfg;
  cfg.depth = 2;
  cfg.width = 3;
  cfg.output_dim = 2;
  ParamVector pv = make_param_vector(make_layout(cfg));
  // layer0 3x1+3, hidden 3x3+3, output 2x3+2
  REQUIRE(pv.size() == 3 + 3 + 9 + 3 + 6 + 2);
  REQUIRE(pv.layout.size() == 6);
  REQUIRE(pv.layout[0].kind == ParamKind::Weight);
  REQUIRE(pv.layout[1].kind == ParamKind::Bias);
  REQUIRE(pv.layout[2].rows == 3);
  REQUIRE(pv.layout[2].cols == 3);
  REQUIRE(pv.layout[4].layer == 2);
  REQUIRE(pv.layout[4].rows == 2);
  REQUIRE(pv.block_offset(2) == 6);
  REQUIRE(pv.block(2).size() == 9);

  for (std::size_t i = 0; i < pv.data.size(); ++i) pv.data[i] = 0.5 * static_cast<double>(i) - 3.0;
  const auto blocks = to_blocks(pv);
  REQUIRE(blocks.size() == 6);
  const ParamVector back = from_blocks(pv.layout, blocks);
  REQUIRE(back.data == pv.data);

  auto bad_count = blocks;
  bad_count.pop_back();
  REQUIRE_THROWS_AS(from_blocks(pv.layout, bad_count), config_error);
  auto bad_size = blocks;
  bad_size[0].push_back(1.0);
  REQUIRE_THROWS_AS(from_blocks(pv.layout, bad_size), config_error);
}

TEST_CASE("parameter counts for the grid shapes") {
  auto count = [](int depth, int width, int out) {
    NetworkConfig c;
    c.depth = depth;
    c.width = width;
    c.output_dim = out;
    return param_count(c);
  };
  REQUIRE(count(1, 1, 1) == 4);
  REQUIRE(count(2, 64, 2) == 4418);
  REQUIRE(count(8, 128, 2) == 116098);
  REQUIRE(count(4, 64, 4) == 12868);
}

TEST_CASE("gradient of an explicit quadratic is exact") {
  oracles::SumSquares ss;
  const std::vector<double> x{1.0, -2.0, 3.0};
  const GradResult r = grad_loss(ss, x);
  REQUIRE(r.value == 14.0);
  REQUIRE(r.gradient == std::vector<double>{2.0, -4.0, 6.0});
}

TEST_CASE("hvp returns exact Hessian-vector products for quadratics") {
  oracles::QuadraticLoss q;
  q.n = 3;
  q.H = {1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0};
  q.b = {0.0, 0.0, 0.0};
  const std::vector<double> x{0.3, -0.1, 0.7};
  const std::vector<double> v{1.0, 1.0, 1.0};
  const auto hv = hvp(q, x, v);
  REQUIRE(hv == std::vector<double>{1.0, 2.0, 3.0});

  // dense non-diagonal case: H v computed by hand
  q.H = {2.0, -1.0, 0.5, -1.0, 3.0, 1.5, 0.5, 1.5, 4.0};
  q.b = {0.2, -0.7, 1.0};
  const std::vector<double> w{0.5, -1.0, 2.0};
  const auto hw = hvp(q, x, w);
  REQUIRE(hw[0] == Approx(2.0 * 0.5 + (-1.0) * (-1.0) + 0.5 * 2.0));
  REQUIRE(hw[1] == Approx((-1.0) * 0.5 + 3.0 * (-1.0) + 1.5 * 2.0));
  REQUIRE(hw[2] == Approx(0.5 * 0.5 + 1.5 * (-1.0) + 4.0 * 2.0));

  REQUIRE_THROWS_AS(hvp(q, x, std::vector<double>{1.0}), config_error);
}

TEST_CASE("non-finite losses raise divergence errors with the parameter norm") {
  oracles::QuadraticLoss q;
  q.n = 2;
  q.H = {1.0, 0.0, 0.0, 1.0};
  q.b = {std::numeric_limits<double>::infinity(), 0.0};
  const std::vector<double> x{3.0, 4.0};
  try {
    grad_loss(q, x);
    FAIL("expected divergence_error");
  } catch (const divergence_error& e) {
    REQUIRE(e.param_norm == Approx(5.0));
  }
  REQUIRE_THROWS_AS(hvp(q, x, std::vector<double>{1.0, 1.0}), divergence_error);
}

TEST_CASE("l2_norm") {
  REQUIRE(l2_norm(std::vector<double>{3.0, 4.0}) == Approx(5.0));
  REQUIRE(l2_norm(std::vector<double>{}) == 0.0);
}
