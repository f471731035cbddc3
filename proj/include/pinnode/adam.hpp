#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "pinnode/errors.hpp"

namespace pinnode {

// First/second moment accumulators; buffers are sized on first use.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// One Adam update with bias correction and constant learning rate.
inline void adam_step(AdamState& st, std::span<double> params, std::span<const double> grad,
                      double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (grad.size() != params.size()) throw config_error("adam: gradient/parameter size mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw config_error("adam: state size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw divergence_error("adam: non-finite gradient");
  ++st.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
    st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace pinnode
