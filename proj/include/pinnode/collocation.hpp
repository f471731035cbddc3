#pragma once

#include <vector>

#include "pinnode/errors.hpp"

namespace pinnode {

// Training points {k T / D : k = 1..D} and held-out midpoints
// {(2k+1) T / (2D) : k = 1..D-1}.
struct CollocationSet {
  std::vector<double> train_points;
  std::vector<double> eval_points;
};

inline CollocationSet make_collocation(double horizon, int count) {
  if (!(horizon > 0.0)) throw parameter_error("collocation: horizon must be > 0");
  if (count < 2) throw parameter_error("collocation: count must be >= 2");
  CollocationSet c;
  c.train_points.resize(count);
  for (int k = 1; k <= count; ++k) c.train_points[k - 1] = k * horizon / count;
  c.eval_points.resize(count - 1);
  for (int k = 1; k < count; ++k) c.eval_points[k - 1] = (2 * k + 1) * horizon / (2.0 * count);
  return c;
}

}  // namespace pinnode
