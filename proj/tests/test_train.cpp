#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "pinnode/adam.hpp"
#include "pinnode/train.hpp"

using namespace pinnode;
using Catch::Approx;

namespace {

TrainingConfig toy_config(Formulation f = Formulation::Uniform, std::uint64_t seed = 7) {
  TrainingConfig cfg;
  cfg.system = make_shm(1.0, std::numbers::pi);
  cfg.network.depth = 2;
  cfg.network.width = 8;
  cfg.network.output_dim = 2;
  cfg.formulation = f;
  cfg.learning_rate = 1e-3;
  cfg.iterations = 40;
  cfg.collocation_count = 8;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("adam first step moves by roughly lr in the gradient sign") {
  AdamState st;
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> g{0.5, -3.0};
  adam_step(st, p, g, 0.01);
  REQUIRE(p[0] == Approx(1.0 - 0.01).epsilon(1e-6));
  REQUIRE(p[1] == Approx(2.0 + 0.01).epsilon(1e-6));
  REQUIRE(st.step == 1);
}

TEST_CASE("adam minimizes a separable quadratic") {
  AdamState st;
  const std::vector<double> target{1.0, -2.0, 0.5};
  std::vector<double> x(3, 0.0), g(3);
  for (int it = 0; it < 3000; ++it) {
    for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i)] = 2.0 * (x[static_cast<std::size_t>(i)] - target[static_cast<std::size_t>(i)]);
    adam_step(st, x, g, 0.05);
  }
  for (int i = 0; i < 3; ++i)
    REQUIRE(x[static_cast<std::size_t>(i)] == Approx(target[static_cast<std::size_t>(i)]).margin(0.01));
}

TEST_CASE("adam validates inputs") {
  AdamState st;
  std::vector<double> p{1.0, 2.0};
  REQUIRE_THROWS_AS(adam_step(st, p, std::vector<double>{1.0}, 0.1), config_error);
  REQUIRE_THROWS_AS(
      adam_step(st, p, std::vector<double>{1.0, std::nan("")}, 0.1), divergence_error);
  adam_step(st, p, std::vector<double>{1.0, 1.0}, 0.1);
  std::vector<double> q{1.0, 2.0, 3.0};
  REQUIRE_THROWS_AS(adam_step(st, q, std::vector<double>{1.0, 1.0, 1.0}, 0.1), config_error);
}

TEST_CASE("training config validation") {
  TrainingConfig cfg = toy_config();
  REQUIRE_NOTHROW(validate(cfg));
  cfg.learning_rate = 0.0;
  REQUIRE_THROWS_AS(validate(cfg), parameter_error);
  cfg = toy_config();
  cfg.iterations = -1;
  REQUIRE_THROWS_AS(validate(cfg), parameter_error);
  cfg = toy_config();
  cfg.collocation_count = 1;
  REQUIRE_THROWS_AS(validate(cfg), parameter_error);
  cfg = toy_config();
  cfg.curve_stride = 0;
  REQUIRE_THROWS_AS(validate(cfg), parameter_error);
  cfg = toy_config();
  cfg.network.output_dim = 3;
  REQUIRE_THROWS_AS(validate(cfg), config_error);
  REQUIRE(parse_formulation("uniform") == Formulation::Uniform);
  REQUIRE(parse_formulation("adaptive") == Formulation::Adaptive);
  REQUIRE_THROWS_AS(parse_formulation("soft"), config_error);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const TrainingConfig cfg = toy_config();
  const TrainReport a = train(cfg);
  const TrainReport b = train(cfg);
  REQUIRE(a.params.data == b.params.data);
  REQUIRE(a.final_loss.total == b.final_loss.total);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    REQUIRE(a.curve[i].step == b.curve[i].step);
    REQUIRE(a.curve[i].total == b.curve[i].total);
  }
  const TrainReport c = train(toy_config(Formulation::Uniform, 8));
  REQUIRE(a.params.data != c.params.data);
}

TEST_CASE("loss curve sampling follows the stride") {
  TrainingConfig cfg = toy_config();
  cfg.iterations = 65;  // records at steps 0 and 64
  const TrainReport rep = train(cfg);
  REQUIRE(rep.iterations_run == 65);
  REQUIRE(!rep.diverged);
  REQUIRE(rep.curve.size() == 2);
  REQUIRE(rep.curve[0].step == 0);
  REQUIRE(rep.curve[1].step == 64);

  // the first sample is the loss at initialization
  const LossComponents init_loss = loss_components(cfg, init_params(cfg.network, cfg.seed));
  REQUIRE(rep.curve[0].residual == init_loss.residual);
  REQUIRE(rep.curve[0].ic == init_loss.ic);
  REQUIRE(rep.curve[0].total == init_loss.total);
  // training reduced the loss
  REQUIRE(rep.curve[1].total < rep.curve[0].total);
  REQUIRE(rep.final_loss.total < init_loss.total);
}

TEST_CASE("zero iterations return the initialization unchanged") {
  TrainingConfig cfg = toy_config();
  cfg.iterations = 0;
  const TrainReport rep = train(cfg);
  REQUIRE(rep.iterations_run == 0);
  REQUIRE(!rep.diverged);
  REQUIRE(rep.curve.empty());
  REQUIRE(rep.params.data == init_params(cfg.network, cfg.seed).data);
  const LossComponents lc = loss_components(cfg, rep.params);
  REQUIRE(rep.final_loss.total == lc.total);
}

TEST_CASE("non-finite losses stop training and are flagged") {
  TrainingConfig cfg = toy_config();
  cfg.residual_scale = std::numeric_limits<double>::infinity();
  const TrainReport rep = train(cfg);
  REQUIRE(rep.diverged);
  REQUIRE(rep.diverged_at == 0);
  REQUIRE(rep.iterations_run == 0);
  REQUIRE(rep.curve.empty());
  REQUIRE(std::isnan(rep.final_loss.residual));
  REQUIRE(std::isnan(rep.final_loss.ic));
  REQUIRE(std::isnan(rep.final_loss.total));
  // parameters keep their last finite values (here: the initialization)
  REQUIRE(rep.params.data == init_params(cfg.network, cfg.seed).data);
}

TEST_CASE("adaptive training raises the attention variables") {
  TrainingConfig cfg = toy_config(Formulation::Adaptive);
  cfg.iterations = 30;
  const TrainReport rep = train(cfg);
  REQUIRE(rep.lambda.size() == static_cast<std::size_t>(cfg.collocation_count) + 1);
  for (double l : rep.lambda) REQUIRE(l > 0.0);
  REQUIRE(!rep.curve.empty());
  REQUIRE(rep.curve[0].lambda_min == 0.0);
  REQUIRE(rep.curve[0].lambda_max == 0.0);

  const TrainReport uni = train(toy_config());
  REQUIRE(uni.lambda.empty());
}

TEST_CASE("adaptive loss helper weighs components with sigmoids") {
  TrainingConfig cfg = toy_config();
  const ParamVector p = init_params(cfg.network, cfg.seed);
  const LossComponents lc = loss_components(cfg, p);
  std::vector<double> lambda(static_cast<std::size_t>(cfg.collocation_count) + 1, 0.0);
  REQUIRE(adaptive_loss(cfg, p, lambda) == Approx(0.5 * lc.total).epsilon(1e-12));
  // saturated lambdas recover the full uniform loss
  std::vector<double> big(lambda.size(), 60.0);
  REQUIRE(adaptive_loss(cfg, p, big) == Approx(lc.total).epsilon(1e-12));
}

TEST_CASE("loss components split residual and initial condition") {
  const TrainingConfig cfg = toy_config();
  const ParamVector p = init_params(cfg.network, cfg.seed);
  const LossComponents lc = loss_components(cfg, p);
  REQUIRE(lc.total == Approx(lc.residual + lc.ic));
  REQUIRE(lc.residual > 0.0);
  REQUIRE(lc.ic > 0.0);
}
