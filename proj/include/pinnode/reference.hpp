#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pinnode/errors.hpp"
#include "pinnode/ode_system.hpp"

namespace pinnode {

// Solution samples at requested times, row-major [time][state].
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  int dim = 0;
  long steps_accepted = 0;
  long steps_rejected = 0;
  double rtol = 0.0;
  double atol = 0.0;

  std::span<const double> row(std::size_t i) const {
    return {states.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kA[7][6] = {
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
inline constexpr double kB5[7] = {35.0 / 384,     0, 500.0 / 1113, 125.0 / 192,
                                  -2187.0 / 6784, 11.0 / 84,       0};
inline constexpr double kB4[7] = {5179.0 / 57600,    0,           7571.0 / 16695, 393.0 / 640,
                                  -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

// Quartic dense-output weights: u(t0 + th) = y0 + h * sum_s k_s * sum_j P[s][j] t^{j+1}.
inline constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
};

inline double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double initial_step(const OdeSystem& sys, std::span<const double> y0,
                           std::span<const double> f0, double rtol, double atol) {
  const int n = sys.dim;
  std::vector<double> scale(n), tmp(n), y1(n), f1(n);
  for (int i = 0; i < n; ++i) scale[i] = atol + rtol * std::abs(y0[i]);
  for (int i = 0; i < n; ++i) tmp[i] = y0[i] / scale[i];
  const double d0 = rms(tmp);
  for (int i = 0; i < n; ++i) tmp[i] = f0[i] / scale[i];
  const double d1 = rms(tmp);
  const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  for (int i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
  sys.rhs(h0, y1, f1);
  for (int i = 0; i < n; ++i) tmp[i] = (f1[i] - f0[i]) / scale[i];
  const double d2 = rms(tmp) / h0;
  double h1;
  if (d1 <= 1e-15 && d2 <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min(100.0 * h0, h1);
}

}  // namespace detail

// Adaptive Dormand-Prince 5(4) integration of the system from t = 0, sampling
// the solution at eval_points via the embedded quartic interpolant.
inline Trajectory rk45_integrate(const OdeSystem& sys, std::span<const double> eval_points,
                                 double rtol = 1e-8, double atol = 1e-10) {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw parameter_error("rk45: tolerances must be > 0");
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    if (!(eval_points[i] >= 0.0) || !(eval_points[i] <= sys.horizon))
      throw parameter_error("rk45: eval points must lie in [0, horizon]");
    if (i > 0 && eval_points[i] < eval_points[i - 1])
      throw parameter_error("rk45: eval points must be non-decreasing");
  }

  const int n = sys.dim;
  Trajectory traj;
  traj.dim = n;
  traj.rtol = rtol;
  traj.atol = atol;

  std::vector<double> y(sys.u0);
  std::size_t idx = 0;
  while (idx < eval_points.size() && eval_points[idx] == 0.0) {
    traj.times.push_back(0.0);
    traj.states.insert(traj.states.end(), y.begin(), y.end());
    ++idx;
  }
  if (idx == eval_points.size()) return traj;
  const double t_end = eval_points.back();

  std::vector<std::vector<double>> k(7, std::vector<double>(n));
  std::vector<double> y_stage(n), y_new(n), err(n), y_int(n);
  double t = 0.0;
  sys.rhs(t, y, k[0]);
  double h = std::min(detail::initial_step(sys, y, k[0], rtol, atol), t_end);

  while (idx < eval_points.size()) {
    bool last = false;
    if (h >= t_end - t) {
      h = t_end - t;
      last = true;
    }
    if (!(h > 1e-14 * std::max(sys.horizon, 1.0)))
      throw stiffness_error("rk45: step size underflow at t = " + std::to_string(t), t);

    for (int s = 1; s < 6; ++s) {
      for (int i = 0; i < n; ++i) {
        double acc = y[i];
        for (int j = 0; j < s; ++j) acc += h * detail::kA[s][j] * k[j][i];
        y_stage[i] = acc;
      }
      sys.rhs(t + detail::kC[s] * h, y_stage, k[s]);
    }
    for (int i = 0; i < n; ++i) {
      double acc = y[i];
      for (int s = 0; s < 6; ++s) acc += h * detail::kB5[s] * k[s][i];
      y_new[i] = acc;
    }
    const double t_new = last ? t_end : t + h;
    sys.rhs(t_new, y_new, k[6]);

    double err_acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double e = 0.0;
      for (int s = 0; s < 7; ++s) e += (detail::kB5[s] - detail::kB4[s]) * k[s][i];
      e *= h;
      const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err_acc += (e / scale) * (e / scale);
    }
    const double err_norm = std::sqrt(err_acc / n);

    if (err_norm <= 1.0) {
      while (idx < eval_points.size() && eval_points[idx] <= t_new) {
        const double te = eval_points[idx];
        if (te == t_new) {
          traj.times.push_back(te);
          traj.states.insert(traj.states.end(), y_new.begin(), y_new.end());
        } else {
          const double th = (te - t) / h;
          double tp[4] = {th, th * th, th * th * th, th * th * th * th};
          for (int i = 0; i < n; ++i) {
            double acc = y[i];
            for (int s = 0; s < 7; ++s) {
              double w = 0.0;
              for (int j = 0; j < 4; ++j) w += detail::kP[s][j] * tp[j];
              acc += h * w * k[s][i];
            }
            y_int[i] = acc;
          }
          traj.times.push_back(te);
          traj.states.insert(traj.states.end(), y_int.begin(), y_int.end());
        }
        ++idx;
      }
      t = t_new;
      y = y_new;
      k[0] = k[6];
      ++traj.steps_accepted;
      const double factor =
          err_norm == 0.0 ? 10.0 : std::min(10.0, 0.9 * std::pow(err_norm, -0.2));
      h *= std::max(0.2, factor);
    } else {
      ++traj.steps_rejected;
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
    }
  }
  return traj;
}

// Closed-form oscillator solution for u0 = [0, pi/2].
inline std::vector<double> shm_closed_form(double omega, double t) {
  const double amp = std::numbers::pi / 2.0;
  return {-amp * std::sin(omega * t), amp * std::cos(omega * t)};
}

// Exact solution of the semi-discrete heat system via the sine eigenbasis of
// the interior Laplacian: u(t) = u_s + sum_n c_n exp(e_n t) v_n with u_s = 1.
inline std::vector<double> heat_spectral_solution(const HeatParams& p, double t) {
  const int n = p.n_points;
  const std::vector<double> e = heat_eigenvalues(n);
  const OdeSystem sys = make_heat(p);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = sys.u0[i] - 1.0;
  const double norm = std::sqrt(2.0 / (n + 1));
  std::vector<double> u(n, 1.0);
  for (int m = 1; m <= n; ++m) {
    double c = 0.0;
    for (int i = 1; i <= n; ++i)
      c += norm * std::sin(m * i * std::numbers::pi / (n + 1)) * w[i - 1];
    const double amp = c * std::exp(e[m - 1] * t);
    for (int i = 1; i <= n; ++i)
      u[i - 1] += amp * norm * std::sin(m * i * std::numbers::pi / (n + 1));
  }
  return u;
}

inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "t";
  for (int i = 1; i <= traj.dim; ++i) os << ",u_" << i;
  os << "\n";
  char buf[32];
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.times[r]);
    os << buf;
    for (double v : traj.row(r)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << "\n";
  }
}

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw parse_error("cannot open '" + path + "' for writing");
  write_trajectory_csv(traj, os);
}

}  // namespace pinnode
