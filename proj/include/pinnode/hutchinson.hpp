#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pinnode/autodiff.hpp"
#include "pinnode/collocation.hpp"
#include "pinnode/errors.hpp"
#include "pinnode/loss.hpp"
#include "pinnode/train.hpp"

namespace pinnode {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

// Deterministic Rademacher probe: entries are +-1 drawn from a splitmix64
// stream keyed by (seed, probe index), so probe j is reproducible on its own.
inline std::vector<double> rademacher_probe(std::uint64_t seed, std::uint64_t index,
                                            std::size_t size) {
  std::uint64_t state = mix64(seed ^ mix64(index + 1));
  std::vector<double> v(size);
  for (std::size_t i = 0; i < size; ++i) v[i] = (splitmix64(state) >> 63) ? -1.0 : 1.0;
  return v;
}

enum class LossComponent { Residual, InitialCondition };

struct TraceEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_probes = 0;
  LossComponent component = LossComponent::Residual;
};

namespace detail {

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace detail

// Hutchinson estimate of tr(H): mean of v^T H v over Rademacher probes, with
// compensated accumulation and the standard error of the mean.
template <LossFunction L>
TraceEstimate hutchinson_trace(const L& loss, std::span<const double> params, int n_probes,
                               std::uint64_t seed) {
  if (n_probes < 1) throw parameter_error("hutchinson: n_probes must be >= 1");
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(n_probes));
  for (int j = 0; j < n_probes; ++j) {
    const std::vector<double> v =
        rademacher_probe(seed, static_cast<std::uint64_t>(j), params.size());
    const std::vector<double> hv = hvp(loss, params, v);
    detail::KahanSum dot;
    for (std::size_t i = 0; i < v.size(); ++i) dot.add(v[i] * hv[i]);
    samples.push_back(dot.s);
  }
  detail::KahanSum sum;
  for (double x : samples) sum.add(x);
  TraceEstimate est;
  est.n_probes = n_probes;
  est.mean = sum.s / n_probes;
  if (n_probes > 1) {
    detail::KahanSum var;
    for (double x : samples) var.add((x - est.mean) * (x - est.mean));
    est.std_error = std::sqrt(var.s / (n_probes - 1)) / std::sqrt(static_cast<double>(n_probes));
  }
  return est;
}

struct NormalizedTraces {
  TraceEstimate residual;
  TraceEstimate ic;
};

// Curvature diagnostics: Hessian traces of the residual and initial-condition
// loss components, normalized so values are comparable across problem sizes
// (heat: residual by the condition number, ic by the state dimension; the
// oscillator is left unscaled).
inline NormalizedTraces normalized_laplacians(const TrainingConfig& cfg, const ParamVector& params,
                                              int n_probes, std::uint64_t seed) {
  validate(cfg);
  const CollocationSet col = make_collocation(cfg.system.horizon, cfg.collocation_count);
  const PinnObjective residual_obj(cfg.network, cfg.system, col.train_points,
                                   cfg.residual_reduction, cfg.residual_scale, true, false);
  const PinnObjective ic_obj(cfg.network, cfg.system, {}, cfg.residual_reduction,
                             cfg.residual_scale, false, true);
  NormalizedTraces out;
  out.residual = hutchinson_trace(residual_obj, params.data, n_probes, mix64(seed ^ 1));
  out.ic = hutchinson_trace(ic_obj, params.data, n_probes, mix64(seed ^ 2));
  out.residual.component = LossComponent::Residual;
  out.ic.component = LossComponent::InitialCondition;
  if (cfg.system.kind == OdeKind::Heat) {
    const double kappa = heat_condition_number(cfg.system.dim);
    out.residual.mean /= kappa;
    out.residual.std_error /= kappa;
    out.ic.mean /= cfg.system.dim;
    out.ic.std_error /= cfg.system.dim;
  }
  return out;
}

}  // namespace pinnode
