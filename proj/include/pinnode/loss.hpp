#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

#include "pinnode/errors.hpp"
#include "pinnode/network.hpp"
#include "pinnode/ode_system.hpp"

namespace pinnode {

enum class Reduction { Mean, Sum };

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct LossComponents {
  double residual = 0.0;
  double ic = 0.0;
  double total = 0.0;
};

// Collocation objective: weighted sum of squared residual norms over the
// training points plus a weighted squared initial-condition mismatch.
// Per-point weights are plain multipliers, so the same evaluator serves the
// uniform loss (constant weights) and the attention-weighted loss (sigmoid
// weights, refreshed between steps).
//
// Evaluation is generic over the scalar type: double for values/gradients,
// dual scalars for Hessian-vector products.  The instance owns reusable
// workspaces, so a given objective must not be shared across threads.
class PinnObjective {
 public:
  PinnObjective(NetworkConfig net, OdeSystem sys, std::vector<double> points,
                Reduction reduction = Reduction::Mean, double residual_scale = 1.0,
                bool with_residual = true, bool with_ic = true)
      : net_(net),
        sys_(std::move(sys)),
        points_(std::move(points)),
        reduction_(reduction),
        residual_scale_(residual_scale),
        with_residual_(with_residual && !points_.empty()),
        with_ic_(with_ic) {
    if (net_.output_dim != sys_.dim)
      throw config_error("objective: network output_dim must equal system dimension");
    wsd_.resize(net_);
    set_uniform();
  }

  long param_size() const { return param_count(net_); }
  const std::vector<double>& points() const { return points_; }
  const OdeSystem& system() const { return sys_; }
  const NetworkConfig& network() const { return net_; }
  Reduction reduction() const { return reduction_; }
  double residual_scale() const { return residual_scale_; }

  // Uniform weights: residual_scale / D per point under mean reduction (just
  // residual_scale under sum), initial condition weighted by the system's
  // ic_weight.
  void set_uniform() {
    const double per =
        reduction_ == Reduction::Mean && !points_.empty()
            ? residual_scale_ / static_cast<double>(points_.size())
            : residual_scale_;
    weights_.assign(points_.size(), per);
    ic_w_ = with_ic_ ? sys_.ic_weight : 0.0;
  }

  // Attention weights sigma(lambda); lambda[0] is the initial-condition
  // multiplier, lambda[1..D] the per-point multipliers.  The residual part
  // always uses mean reduction here.
  void set_attention(std::span<const double> lambda) {
    if (lambda.size() != points_.size() + 1)
      throw config_error("objective: lambda size must be point count + 1");
    const double per = residual_scale_ / static_cast<double>(points_.size());
    weights_.resize(points_.size());
    for (std::size_t d = 0; d < points_.size(); ++d)
      weights_[d] = sigmoid(lambda[d + 1]) * per;
    ic_w_ = with_ic_ ? sigmoid(lambda[0]) * sys_.ic_weight : 0.0;
  }

  template <typename S>
  S eval(std::span<const S> params) const {
    return eval_impl<S>(params, {}, nullptr, nullptr);
  }

  template <typename S>
  S eval_with_gradient(std::span<const S> params, std::span<S> grad) const {
    return eval_impl<S>(params, grad, nullptr, nullptr);
  }

  // Value plus the raw (unweighted) per-point squared residuals and raw
  // squared initial-condition mismatch; grad may be empty.
  double eval_detailed(std::span<const double> params, std::span<double> grad,
                       std::vector<double>* point_sq, double* ic_sq) const {
    return eval_impl<double>(params, grad, point_sq, ic_sq);
  }

 private:
  template <typename S>
  BatchWorkspace<S>& workspace() const {
    if constexpr (std::is_same_v<S, double>) {
      return wsd_;
    } else {
      if (wsdual_.width == 0) wsdual_.resize(net_);
      return wsdual_;
    }
  }

  template <typename S>
  S eval_impl(std::span<const S> params, std::span<S> grad, std::vector<double>* point_sq,
              double* ic_sq) const {
    if (static_cast<long>(params.size()) != param_size())
      throw config_error("objective: parameter vector size does not match network");
    if (!grad.empty() && grad.size() != params.size())
      throw config_error("objective: gradient size does not match parameter size");
    const bool do_grad = !grad.empty();
    if (do_grad) std::fill(grad.begin(), grad.end(), S(0));
    auto& ws = workspace<S>();
    const int n = sys_.dim;
    const int D = static_cast<int>(points_.size());
    S total = S(0);

    if (with_residual_) {
      if (point_sq) {
        point_sq->clear();
        point_sq->reserve(points_.size());
      }
      for (int base = 0; base < D; base += kLanes) {
        const int active = std::min(kLanes, D - base);
        for (int q = 0; q < kLanes; ++q)
          ws.ts[q] = points_[static_cast<std::size_t>(base + (q < active ? q : active - 1))];
        extended_forward_batch<S>(net_, params, ws);
        sys_.residual_batch(ws.u.data(), ws.ud.data(), ws.r.data(), kLanes);
        S sq[kLanes];
        for (int q = 0; q < kLanes; ++q) sq[q] = S(0);
        for (int i = 0; i < n; ++i) {
          const S* ri = ws.r.data() + static_cast<std::size_t>(i) * kLanes;
          for (int q = 0; q < kLanes; ++q) sq[q] += ri[q] * ri[q];
        }
        for (int q = 0; q < active; ++q) {
          total += weights_[static_cast<std::size_t>(base + q)] * sq[q];
          if (point_sq) point_sq->push_back(scalar_value(sq[q]));
        }
        if (do_grad) {
          double lane_scale[kLanes];
          for (int q = 0; q < kLanes; ++q)
            lane_scale[q] = q < active ? 2.0 * weights_[static_cast<std::size_t>(base + q)] : 0.0;
          for (int i = 0; i < n; ++i) {
            S* ri = ws.r.data() + static_cast<std::size_t>(i) * kLanes;
            for (int q = 0; q < kLanes; ++q) ri[q] *= lane_scale[q];
          }
          sys_.residual_adjoint_batch(ws.r.data(), ws.ubar.data(), ws.udbar.data(), kLanes);
          extended_backward_batch<S>(net_, params, ws, grad);
        }
      }
    }

    if (with_ic_) {
      ws.ts.fill(0.0);
      extended_forward_batch<S>(net_, params, ws);
      S ic = S(0);
      for (int i = 0; i < n; ++i) {
        const S d = ws.u[static_cast<std::size_t>(i) * kLanes] - S(sys_.u0[i]);
        ic += d * d;
      }
      if (ic_sq) *ic_sq = scalar_value(ic);
      total += ic_w_ * ic;
      if (do_grad) {
        std::fill(ws.ubar.begin(), ws.ubar.end(), S(0));
        std::fill(ws.udbar.begin(), ws.udbar.end(), S(0));
        for (int i = 0; i < n; ++i)
          ws.ubar[static_cast<std::size_t>(i) * kLanes] =
              2.0 * ic_w_ * (ws.u[static_cast<std::size_t>(i) * kLanes] - S(sys_.u0[i]));
        extended_backward_batch<S>(net_, params, ws, grad);
      }
    }
    return total;
  }

  NetworkConfig net_;
  OdeSystem sys_;
  std::vector<double> points_;
  Reduction reduction_;
  double residual_scale_;
  bool with_residual_;
  bool with_ic_;
  std::vector<double> weights_;
  double ic_w_ = 0.0;
  mutable BatchWorkspace<double> wsd_;
  mutable BatchWorkspace<DualScalar> wsdual_;
};

}  // namespace pinnode
