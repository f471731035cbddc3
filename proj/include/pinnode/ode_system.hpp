#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pinnode/errors.hpp"

namespace pinnode {

enum class OdeKind { Shm, Heat };

inline const char* benchmark_name(OdeKind k) { return k == OdeKind::Shm ? "shm" : "heat"; }

struct ShmParams {
  double omega = 1.0;
  double horizon = std::numbers::pi;
};

struct HeatParams {
  int n_points = 4;
  double horizon = 0.1;
};

// Linear constant-coefficient system du/dt = A u + f with initial state u0.
// A is kept in structured form: a 2x2 rotation generator for the oscillator,
// symmetric tridiagonal bands for the heat semi-discretization.
class OdeSystem {
 public:
  OdeKind kind = OdeKind::Shm;
  int dim = 2;
  double horizon = 0.0;
  std::vector<double> u0;
  std::vector<double> forcing;  // empty means zero
  double ic_weight = 1.0;       // initial-condition weight in the training loss

  // structured A
  double omega = 0.0;  // shm
  double diag = 0.0;   // heat main band
  double off = 0.0;    // heat sub/super band

  // A u + f, one column per lane; arrays are [state][lane].
  template <typename S>
  void apply_rhs_batch(const S* u, S* out, int lanes) const {
    if (kind == OdeKind::Shm) {
      for (int q = 0; q < lanes; ++q) {
        out[0 * lanes + q] = (-omega) * u[1 * lanes + q];
        out[1 * lanes + q] = omega * u[0 * lanes + q];
      }
    } else {
      for (int i = 0; i < dim; ++i) {
        const S* um = i > 0 ? u + (i - 1) * lanes : nullptr;
        const S* uc = u + i * lanes;
        const S* up = i + 1 < dim ? u + (i + 1) * lanes : nullptr;
        S* o = out + i * lanes;
        for (int q = 0; q < lanes; ++q) {
          S acc = diag * uc[q];
          if (um) acc += off * um[q];
          if (up) acc += off * up[q];
          o[q] = acc;
        }
      }
    }
    if (!forcing.empty()) {
      for (int i = 0; i < dim; ++i)
        for (int q = 0; q < lanes; ++q) out[i * lanes + q] += forcing[i];
    }
  }

  // r = u_t - A u - f, batched over lanes.
  template <typename S>
  void residual_batch(const S* u, const S* ut, S* r, int lanes) const {
    apply_rhs_batch(u, r, lanes);
    for (int i = 0; i < dim; ++i)
      for (int q = 0; q < lanes; ++q) r[i * lanes + q] = ut[i * lanes + q] - r[i * lanes + q];
  }

  // Adjoint of the residual head: given rbar (already scaled), overwrite
  // ubar = -A^T rbar and udbar = rbar.
  template <typename S>
  void residual_adjoint_batch(const S* rbar, S* ubar, S* udbar, int lanes) const {
    if (kind == OdeKind::Shm) {
      // A^T = -A for the rotation generator
      for (int q = 0; q < lanes; ++q) {
        ubar[0 * lanes + q] = (-omega) * rbar[1 * lanes + q];
        ubar[1 * lanes + q] = omega * rbar[0 * lanes + q];
      }
    } else {
      for (int i = 0; i < dim; ++i) {
        const S* rm = i > 0 ? rbar + (i - 1) * lanes : nullptr;
        const S* rc = rbar + i * lanes;
        const S* rp = i + 1 < dim ? rbar + (i + 1) * lanes : nullptr;
        S* o = ubar + i * lanes;
        for (int q = 0; q < lanes; ++q) {
          S acc = diag * rc[q];
          if (rm) acc += off * rm[q];
          if (rp) acc += off * rp[q];
          o[q] = -acc;
        }
      }
    }
    for (int i = 0; i < dim * lanes; ++i) udbar[i] = rbar[i];
  }

  // Single-point residual r(t, u, u_t); t is unused because the system is
  // autonomous, but stays in the signature for generality.
  std::vector<double> residual(double /*t*/, std::span<const double> u,
                               std::span<const double> ut) const {
    if (static_cast<int>(u.size()) != dim || static_cast<int>(ut.size()) != dim)
      throw config_error("residual: state size does not match system dimension");
    std::vector<double> r(dim);
    residual_batch<double>(u.data(), ut.data(), r.data(), 1);
    return r;
  }

  void rhs(double /*t*/, std::span<const double> u, std::span<double> out) const {
    apply_rhs_batch<double>(u.data(), out.data(), 1);
  }

  // Spectral norm of A.
  double matrix_norm() const;
};

inline OdeSystem make_shm(double omega, double horizon) {
  if (!(omega > 0.0)) throw parameter_error("shm: omega must be > 0");
  if (!(horizon > 0.0)) throw parameter_error("shm: horizon must be > 0");
  OdeSystem s;
  s.kind = OdeKind::Shm;
  s.dim = 2;
  s.horizon = horizon;
  s.omega = omega;
  s.u0 = {0.0, std::numbers::pi / 2.0};
  s.ic_weight = 1.0;
  return s;
}

inline OdeSystem make_shm(const ShmParams& p) { return make_shm(p.omega, p.horizon); }

// Eigenvalues of the heat operator, ascending in magnitude:
// e_n = -2 (N-1)^2 (1 - cos(n pi / (N+1))), n = 1..N.
inline std::vector<double> heat_eigenvalues(int n_points) {
  if (n_points < 3) throw parameter_error("heat: n_points must be >= 3");
  const double c = 2.0 * (n_points - 1.0) * (n_points - 1.0);
  std::vector<double> e(n_points);
  for (int n = 1; n <= n_points; ++n)
    e[n - 1] = -c * (1.0 - std::cos(n * std::numbers::pi / (n_points + 1)));
  return e;
}

inline double heat_condition_number(int n_points) {
  if (n_points < 3) throw parameter_error("heat: n_points must be >= 3");
  const double num = 1.0 - std::cos(n_points * std::numbers::pi / (n_points + 1));
  const double den = 1.0 - std::cos(std::numbers::pi / (n_points + 1));
  return num / den;
}

inline OdeSystem make_heat(int n_points, double horizon = 0.1) {
  if (n_points < 3) throw parameter_error("heat: n_points must be >= 3");
  if (!(horizon > 0.0)) throw parameter_error("heat: horizon must be > 0");
  OdeSystem s;
  s.kind = OdeKind::Heat;
  s.dim = n_points;
  s.horizon = horizon;
  const double h2 = (n_points - 1.0) * (n_points - 1.0);
  s.diag = -2.0 * h2;
  s.off = h2;
  s.forcing.assign(n_points, 0.0);
  s.forcing.front() = h2;  // left boundary value 1
  s.forcing.back() = h2;   // right boundary value 1
  s.u0.resize(n_points);
  for (int k = 0; k < n_points; ++k) {
    const double x = static_cast<double>(k) / (n_points - 1);
    s.u0[k] = std::sin(2.0 * std::numbers::pi * x) + 1.0;
  }
  s.ic_weight = std::abs(heat_eigenvalues(n_points).back());
  return s;
}

inline OdeSystem make_heat(const HeatParams& p) { return make_heat(p.n_points, p.horizon); }

inline double OdeSystem::matrix_norm() const {
  if (kind == OdeKind::Shm) return omega;
  return std::abs(heat_eigenvalues(dim).back());
}

}  // namespace pinnode
