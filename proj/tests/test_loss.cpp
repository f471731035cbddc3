#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pinnode/collocation.hpp"
#include "pinnode/loss.hpp"
#include "pinnode/metrics.hpp"
#include "oracles.hpp"

using namespace pinnode;
using Catch::Approx;

namespace {

NetworkConfig net(int depth, int width, int out, Arch arch = Arch::Mlp) {
  NetworkConfig c;
  c.depth = depth;
  c.width = width;
  c.arch = arch;
  c.output_dim = out;
  return c;
}

// Evaluate through a single out-of-line code path so that results for
// identical objective state compare bitwise (inlining can contract
// multiply-adds differently at each call site).
__attribute__((noinline)) double eval_once(const PinnObjective& obj,
                                           std::span<const double> p) {
  return obj.eval<double>(p);
}

}  // namespace

TEST_CASE("collocation points are the uniform grid and its midpoints") {
  const CollocationSet c = make_collocation(1.0, 4);
  REQUIRE(c.train_points == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  REQUIRE(c.eval_points == std::vector<double>{0.375, 0.625, 0.875});
  REQUIRE_THROWS_AS(make_collocation(0.0, 4), parameter_error);
  REQUIRE_THROWS_AS(make_collocation(1.0, 1), parameter_error);
  // horizon scales linearly
  const CollocationSet d = make_collocation(2.0, 4);
  REQUIRE(d.train_points[0] == 0.5);
  REQUIRE(d.eval_points.back() == 1.75);
}

TEST_CASE("relative error metric") {
  const std::vector<double> ref{0.0, std::numbers::pi / 2.0};
  REQUIRE(rel_error(ref, ref) == 0.0);
  REQUIRE(rel_error(ref, std::vector<double>{0.0, 0.0}) == 1.0);
  REQUIRE(rel_error(ref, std::vector<double>{0.0, std::numbers::pi}) == 1.0);
  REQUIRE(rel_error_ic(ref, std::vector<double>{0.1, std::numbers::pi / 2.0}) ==
          Approx(0.06366197723675814));
  REQUIRE_THROWS_AS(rel_error(ref, std::vector<double>{1.0}), config_error);
  REQUIRE_THROWS_AS(rel_error(std::vector<double>{}, std::vector<double>{}), config_error);
  REQUIRE_THROWS_AS(rel_error(std::vector<double>{0.0, 0.0}, ref), metric_error);
}

TEST_CASE("zero network: residual vanishes, initial condition term is the state norm") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 8);
  const NetworkConfig cfg = net(2, 8, 2);
  PinnObjective obj(cfg, sys, col.train_points);
  std::vector<double> params(static_cast<std::size_t>(param_count(cfg)), 0.0);

  std::vector<double> point_sq;
  double ic_sq = 0.0;
  const double total = obj.eval_detailed(params, {}, &point_sq, &ic_sq);
  for (double sq : point_sq) REQUIRE(sq == 0.0);
  REQUIRE(ic_sq == Approx(std::numbers::pi * std::numbers::pi / 4.0));
  REQUIRE(total == Approx(std::numbers::pi * std::numbers::pi / 4.0));
  REQUIRE(obj.eval<double>(params) == total);
}

TEST_CASE("sum reduction scales the residual term by the point count") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 12);
  const NetworkConfig cfg = net(2, 6, 2);
  const ParamVector p = init_params(cfg, 3);

  PinnObjective mean_obj(cfg, sys, col.train_points, Reduction::Mean);
  PinnObjective sum_obj(cfg, sys, col.train_points, Reduction::Sum);
  std::vector<double> sq_mean, sq_sum;
  double ic_mean = 0.0, ic_sum = 0.0;
  const double lm = mean_obj.eval_detailed(p.data, {}, &sq_mean, &ic_mean);
  const double ls = sum_obj.eval_detailed(p.data, {}, &sq_sum, &ic_sum);
  REQUIRE(sq_mean == sq_sum);
  REQUIRE(ic_mean == ic_sum);
  REQUIRE(ls - ic_sum == Approx(12.0 * (lm - ic_mean)).epsilon(1e-12));
}

TEST_CASE("attention weights at zero give half the uniform mean loss") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 10);
  const NetworkConfig cfg = net(2, 7, 2);
  const ParamVector p = init_params(cfg, 11);

  PinnObjective obj(cfg, sys, col.train_points);
  const double uniform = eval_once(obj, p.data);
  std::vector<double> lambda(11, 0.0);
  obj.set_attention(lambda);
  const double attention = eval_once(obj, p.data);
  // sigmoid(0) = 1/2 exactly, so every weight is exactly halved; scaling by a
  // power of two commutes with rounding at each accumulation, so the halved
  // total is bitwise half the uniform one.
  REQUIRE(2.0 * attention == uniform);

  obj.set_uniform();
  REQUIRE(eval_once(obj, p.data) == uniform);
  REQUIRE_THROWS_AS(obj.set_attention(std::vector<double>(5, 0.0)), config_error);
}

TEST_CASE("attention weighting responds to lambda") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 4);
  const NetworkConfig cfg = net(1, 5, 2);
  const ParamVector p = init_params(cfg, 2);
  PinnObjective obj(cfg, sys, col.train_points);

  std::vector<double> lam(5, 0.0);
  obj.set_attention(lam);
  const double base = obj.eval<double>(p.data);
  lam[0] = 30.0;  // saturate the ic weight to ~1
  obj.set_attention(lam);
  const double heavier = obj.eval<double>(p.data);
  REQUIRE(heavier > base);
}

TEST_CASE("residual scale multiplies the residual term only") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 6);
  const NetworkConfig cfg = net(2, 6, 2);
  const ParamVector p = init_params(cfg, 7);

  PinnObjective plain(cfg, sys, col.train_points);
  PinnObjective scaled(cfg, sys, col.train_points, Reduction::Mean, 0.25);
  std::vector<double> sq;
  double ic = 0.0;
  const double lp = plain.eval_detailed(p.data, {}, &sq, &ic);
  const double lsc = scaled.eval<double>(p.data);
  REQUIRE(lsc - ic == Approx(0.25 * (lp - ic)).epsilon(1e-12));
}

TEST_CASE("component switches isolate the two loss terms") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 6);
  const NetworkConfig cfg = net(2, 6, 2);
  const ParamVector p = init_params(cfg, 7);

  PinnObjective full(cfg, sys, col.train_points);
  PinnObjective res_only(cfg, sys, col.train_points, Reduction::Mean, 1.0, true, false);
  PinnObjective ic_only(cfg, sys, {}, Reduction::Mean, 1.0, false, true);
  const double a = res_only.eval<double>(p.data);
  const double b = ic_only.eval<double>(p.data);
  REQUIRE(a + b == Approx(full.eval<double>(p.data)).epsilon(1e-14));
  REQUIRE(a > 0.0);
  REQUIRE(b > 0.0);
}

TEST_CASE("objective gradient matches finite differences") {
  for (bool heat : {false, true}) {
    const OdeSystem sys = heat ? make_heat(4, 0.1) : make_shm(1.0, std::numbers::pi);
    const CollocationSet col = make_collocation(sys.horizon, 5);
    const NetworkConfig cfg = net(2, 6, sys.dim, heat ? Arch::ResNet : Arch::Mlp);
    const ParamVector p = init_params(cfg, 13);
    PinnObjective obj(cfg, sys, col.train_points);

    std::vector<double> grad(p.data.size());
    obj.eval_with_gradient<double>(p.data, grad);
    const auto fd = oracles::fd_gradient(
        [&](const std::vector<double>& w) { return obj.eval<double>(w); }, p.data);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      num += (grad[i] - fd[i]) * (grad[i] - fd[i]);
      den += fd[i] * fd[i];
    }
    REQUIRE(std::sqrt(num / den) < 1e-6);
  }
}

TEST_CASE("gradient buffer is cleared between evaluations") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 5);
  const NetworkConfig cfg = net(2, 5, 2);
  const ParamVector p = init_params(cfg, 1);
  PinnObjective obj(cfg, sys, col.train_points);

  std::vector<double> g1(p.data.size(), 0.0), g2(p.data.size(), 123.0);
  obj.eval_with_gradient<double>(p.data, g1);
  obj.eval_with_gradient<double>(p.data, g2);
  REQUIRE(g1 == g2);
}

TEST_CASE("objective validates shapes") {
  const OdeSystem sys = make_shm(1.0, std::numbers::pi);
  const CollocationSet col = make_collocation(sys.horizon, 4);
  REQUIRE_THROWS_AS(PinnObjective(net(2, 5, 3), sys, col.train_points), config_error);

  PinnObjective obj(net(2, 5, 2), sys, col.train_points);
  std::vector<double> small(3, 0.0);
  REQUIRE_THROWS_AS(obj.eval<double>(std::span<const double>(small)), config_error);
  const ParamVector p = init_params(net(2, 5, 2), 0);
  std::vector<double> bad_grad(2);
  REQUIRE_THROWS_AS(
      obj.eval_with_gradient<double>(p.data, std::span<double>(bad_grad)), config_error);
}

TEST_CASE("sigmoid saturates correctly at extremes") {
  REQUIRE(sigmoid(0.0) == 0.5);
  REQUIRE(sigmoid(800.0) == 1.0);
  REQUIRE(sigmoid(-800.0) == Approx(0.0).margin(1e-300));
  REQUIRE(sigmoid(2.0) == Approx(1.0 / (1.0 + std::exp(-2.0))));
  REQUIRE(sigmoid(-2.0) == Approx(1.0 - sigmoid(2.0)).epsilon(1e-14));
}
