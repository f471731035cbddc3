#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pinnode/adam.hpp"
#include "pinnode/collocation.hpp"
#include "pinnode/errors.hpp"
#include "pinnode/loss.hpp"
#include "pinnode/network.hpp"
#include "pinnode/ode_system.hpp"

namespace pinnode {

enum class Formulation { Uniform, Adaptive };

inline const char* formulation_name(Formulation f) {
  return f == Formulation::Uniform ? "uniform" : "adaptive";
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "uniform") return Formulation::Uniform;
  if (s == "adaptive") return Formulation::Adaptive;
  throw config_error("unknown formulation '" + s + "' (expected uniform or adaptive)");
}

struct TrainingConfig {
  NetworkConfig network;
  OdeSystem system;
  Formulation formulation = Formulation::Uniform;
  double learning_rate = 1e-3;
  double lambda_lr = 0.0;  // <= 0 means use learning_rate
  long iterations = 10241;
  int collocation_count = 256;
  std::uint64_t seed = 0;
  Reduction residual_reduction = Reduction::Mean;
  double residual_scale = 1.0;
  long curve_stride = 64;
};

inline void validate(const TrainingConfig& c) {
  validate(c.network);
  if (c.network.output_dim != c.system.dim)
    throw config_error("training: network output_dim must equal system dimension");
  if (!(c.learning_rate > 0.0)) throw parameter_error("training: learning_rate must be > 0");
  if (c.iterations < 0) throw parameter_error("training: iterations must be >= 0");
  if (c.collocation_count < 2) throw parameter_error("training: collocation_count must be >= 2");
  if (c.curve_stride < 1) throw parameter_error("training: curve_stride must be >= 1");
}

// Loss-curve sample.  residual/ic/total are the unweighted components
// (attention multipliers excluded) so curves are comparable across
// formulations; lambda_* summarize the attention state for adaptive runs.
struct LossCurvePoint {
  long step = 0;
  double residual = 0.0;
  double ic = 0.0;
  double total = 0.0;
  double lambda_min = 0.0;
  double lambda_mean = 0.0;
  double lambda_max = 0.0;
};

struct TrainReport {
  TrainingConfig config;
  ParamVector params;
  std::vector<double> lambda;  // empty for uniform runs
  std::vector<LossCurvePoint> curve;
  LossComponents final_loss;
  long iterations_run = 0;
  bool diverged = false;
  long diverged_at = -1;
};

namespace detail {

inline double reduce_residual(const std::vector<double>& point_sq, Reduction red, double scale) {
  double s = 0.0;
  for (double v : point_sq) s += v;
  if (red == Reduction::Mean && !point_sq.empty()) s /= static_cast<double>(point_sq.size());
  return scale * s;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

// Unweighted loss components at the given parameters under the config's
// reduction and scaling.
inline LossComponents loss_components(const TrainingConfig& cfg, const ParamVector& params) {
  validate(cfg);
  const CollocationSet col = make_collocation(cfg.system.horizon, cfg.collocation_count);
  PinnObjective obj(cfg.network, cfg.system, col.train_points, cfg.residual_reduction,
                    cfg.residual_scale);
  std::vector<double> point_sq;
  double ic_sq = 0.0;
  obj.eval_detailed(params.data, {}, &point_sq, &ic_sq);
  LossComponents out;
  out.residual = detail::reduce_residual(point_sq, cfg.residual_reduction, cfg.residual_scale);
  out.ic = cfg.system.ic_weight * ic_sq;
  out.total = out.residual + out.ic;
  return out;
}

// Attention-weighted loss value at (params, lambda); lambda[0] weights the
// initial condition, lambda[1..D] the collocation points.
inline double adaptive_loss(const TrainingConfig& cfg, const ParamVector& params,
                            std::span<const double> lambda) {
  validate(cfg);
  const CollocationSet col = make_collocation(cfg.system.horizon, cfg.collocation_count);
  PinnObjective obj(cfg.network, cfg.system, col.train_points, Reduction::Mean,
                    cfg.residual_scale);
  obj.set_attention(lambda);
  return obj.eval<double>(params.data);
}

// Full training loop: Adam descent on the network parameters and, for the
// adaptive formulation, simultaneous Adam ascent on the attention variables
// computed from the same evaluation.  Divergence (non-finite loss or
// gradient) stops the loop and flags the report; the parameters keep their
// last finite values.
inline TrainReport train(const TrainingConfig& cfg) {
  validate(cfg);
  const CollocationSet col = make_collocation(cfg.system.horizon, cfg.collocation_count);
  PinnObjective obj(cfg.network, cfg.system, col.train_points, cfg.residual_reduction,
                    cfg.residual_scale);
  const int D = cfg.collocation_count;
  const bool adaptive = cfg.formulation == Formulation::Adaptive;
  const double lambda_lr = cfg.lambda_lr > 0.0 ? cfg.lambda_lr : cfg.learning_rate;

  TrainReport rep;
  rep.config = cfg;
  rep.params = init_params(cfg.network, cfg.seed);
  const std::size_t M = rep.params.data.size();
  if (adaptive) rep.lambda.assign(static_cast<std::size_t>(D) + 1, 0.0);

  AdamState wstate, lstate;
  std::vector<double> grad(M), point_sq, lgrad;
  if (adaptive) lgrad.resize(static_cast<std::size_t>(D) + 1);

  for (long it = 0; it < cfg.iterations; ++it) {
    if (adaptive) obj.set_attention(rep.lambda);
    double ic_sq = 0.0;
    const double loss = obj.eval_detailed(rep.params.data, grad, &point_sq, &ic_sq);
    if (!std::isfinite(loss) || !detail::all_finite(grad)) {
      rep.diverged = true;
      rep.diverged_at = it;
      break;
    }
    if (it % cfg.curve_stride == 0) {
      LossCurvePoint pt;
      pt.step = it;
      pt.residual = detail::reduce_residual(point_sq, cfg.residual_reduction, cfg.residual_scale);
      pt.ic = cfg.system.ic_weight * ic_sq;
      pt.total = pt.residual + pt.ic;
      if (adaptive) {
        double lo = rep.lambda[0], hi = rep.lambda[0], sum = 0.0;
        for (double l : rep.lambda) {
          lo = std::min(lo, l);
          hi = std::max(hi, l);
          sum += l;
        }
        pt.lambda_min = lo;
        pt.lambda_max = hi;
        pt.lambda_mean = sum / static_cast<double>(rep.lambda.size());
      }
      rep.curve.push_back(pt);
    }
    adam_step(wstate, rep.params.data, grad, cfg.learning_rate);
    if (adaptive) {
      const double per = cfg.residual_scale / static_cast<double>(D);
      const double s0 = sigmoid(rep.lambda[0]);
      // ascent: feed Adam the negated attention gradient
      lgrad[0] = -(s0 * (1.0 - s0) * cfg.system.ic_weight * ic_sq);
      for (int d = 0; d < D; ++d) {
        const double s = sigmoid(rep.lambda[static_cast<std::size_t>(d) + 1]);
        lgrad[static_cast<std::size_t>(d) + 1] =
            -(s * (1.0 - s) * per * point_sq[static_cast<std::size_t>(d)]);
      }
      adam_step(lstate, rep.lambda, lgrad, lambda_lr);
    }
    rep.iterations_run = it + 1;
  }

  if (rep.diverged) {
    const double bad = std::nan("");
    rep.final_loss = {bad, bad, bad};
  } else {
    rep.final_loss = loss_components(cfg, rep.params);
  }
  return rep;
}

}  // namespace pinnode
