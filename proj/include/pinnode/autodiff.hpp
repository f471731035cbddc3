#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "pinnode/dual.hpp"
#include "pinnode/errors.hpp"
#include "pinnode/param_vector.hpp"

namespace pinnode {

// A loss maps a flat parameter vector to a scalar and can do so for both
// plain doubles and dual scalars; the dual instantiation is what makes
// forward-over-reverse Hessian-vector products possible without a tape.
template <typename L, typename S>
concept DifferentiableIn = requires(const L& l, std::span<const S> p, std::span<S> g) {
  { l.eval(p) } -> std::convertible_to<S>;
  { l.eval_with_gradient(p, g) } -> std::convertible_to<S>;
};

template <typename L>
concept LossFunction = DifferentiableIn<L, double> && DifferentiableIn<L, DualScalar>;

struct GradResult {
  double value = 0.0;
  std::vector<double> gradient;
};

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

template <LossFunction L>
GradResult grad_loss(const L& loss, std::span<const double> params) {
  GradResult res;
  res.gradient.assign(params.size(), 0.0);
  res.value = loss.eval_with_gradient(params, std::span<double>(res.gradient));
  bool ok = std::isfinite(res.value);
  for (double g : res.gradient) ok = ok && std::isfinite(g);
  if (!ok)
    throw divergence_error(
        "non-finite loss or gradient (parameter norm " + std::to_string(l2_norm(params)) + ")",
        l2_norm(params));
  return res;
}

// Hessian-vector product via a dual-seeded reverse pass: parameters carry the
// direction in their tangent slot, so the gradient tangents are H v.
template <LossFunction L>
std::vector<double> hvp(const L& loss, std::span<const double> params,
                        std::span<const double> v) {
  if (v.size() != params.size())
    throw config_error("hvp: direction size does not match parameter size");
  std::vector<DualScalar> p(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) p[i] = {params[i], v[i]};
  std::vector<DualScalar> g(params.size(), DualScalar(0.0));
  const DualScalar val =
      loss.eval_with_gradient(std::span<const DualScalar>(p), std::span<DualScalar>(g));
  std::vector<double> out(params.size());
  bool ok = isfinite(val);
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[i] = g[i].tangent;
    ok = ok && std::isfinite(g[i].value) && std::isfinite(g[i].tangent);
  }
  if (!ok)
    throw divergence_error(
        "non-finite Hessian-vector product (parameter norm " + std::to_string(l2_norm(params)) + ")",
        l2_norm(params));
  return out;
}

}  // namespace pinnode
