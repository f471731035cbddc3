#pragma once

#include <cmath>
#include <span>

#include "pinnode/errors.hpp"

namespace pinnode {

struct ErrorReport {
  double rel_error_eval = 0.0;
  double rel_error_ic = 0.0;
};

// Relative L2 error sqrt(sum |hat - ref|^2 / sum |ref|^2) over flattened
// samples (rows of a trajectory, or a single state).
inline double rel_error(std::span<const double> ref, std::span<const double> hat) {
  if (ref.size() != hat.size() || ref.empty())
    throw config_error("rel_error: inputs must be non-empty and the same size");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = hat[i] - ref[i];
    num += d * d;
    den += ref[i] * ref[i];
  }
  if (den == 0.0) throw metric_error("rel_error: reference norm is zero");
  return std::sqrt(num / den);
}

inline double rel_error_ic(std::span<const double> u0, std::span<const double> u0_hat) {
  return rel_error(u0, u0_hat);
}

}  // namespace pinnode
