#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pinnode/dual.hpp"
#include "pinnode/errors.hpp"
#include "pinnode/param_vector.hpp"
#include "pinnode/simd.hpp"

namespace pinnode {

enum class Arch { Mlp, ResNet };

inline const char* arch_name(Arch a) { return a == Arch::Mlp ? "mlp" : "resnet"; }

inline Arch parse_arch(const std::string& s) {
  if (s == "mlp") return Arch::Mlp;
  if (s == "resnet") return Arch::ResNet;
  throw config_error("unknown arch '" + s + "' (expected mlp or resnet)");
}

// Scalar-input network u: R -> R^output_dim with `depth` tanh hidden layers
// of size `width` and a linear output layer.  ResNet adds identity skip
// connections on hidden layers after the first.
struct NetworkConfig {
  int depth = 2;
  int width = 64;
  Arch arch = Arch::Mlp;
  int output_dim = 1;

  static constexpr int input_dim = 1;
};

inline void validate(const NetworkConfig& c) {
  if (c.depth < 1) throw config_error("network depth must be >= 1");
  if (c.width < 1) throw config_error("network width must be >= 1");
  if (c.output_dim < 1) throw config_error("network output_dim must be >= 1");
}

inline long param_count(const NetworkConfig& c) {
  validate(c);
  const long w = c.width, n = c.output_dim, d = c.depth;
  return (w + w) + (d - 1) * (w * w + w) + (w * n + n);
}

// Blocks in flat order: layer 0 (input), hidden layers, output layer; each
// layer stores its weight matrix (row-major) then its bias.
inline std::vector<LayerShape> make_layout(const NetworkConfig& c) {
  validate(c);
  std::vector<LayerShape> layout;
  layout.reserve(2 * (c.depth + 1));
  auto add = [&](int layer, int rows, int cols) {
    layout.push_back({layer, ParamKind::Weight, rows, cols});
    layout.push_back({layer, ParamKind::Bias, rows, 1});
  };
  add(0, c.width, 1);
  for (int k = 1; k < c.depth; ++k) add(k, c.width, c.width);
  add(c.depth, c.output_dim, c.width);
  return layout;
}

namespace detail {

struct LayerSpan {
  long w_off = 0;
  long b_off = 0;
  int rows = 0;
  int cols = 0;
};

inline std::vector<LayerSpan> layer_spans(const NetworkConfig& c) {
  std::vector<LayerSpan> spans;
  spans.reserve(c.depth + 1);
  long off = 0;
  auto add = [&](int rows, int cols) {
    LayerSpan s;
    s.w_off = off;
    s.b_off = off + static_cast<long>(rows) * cols;
    s.rows = rows;
    s.cols = cols;
    off = s.b_off + rows;
    spans.push_back(s);
  };
  add(c.width, 1);
  for (int k = 1; k < c.depth; ++k) add(c.width, c.width);
  add(c.output_dim, c.width);
  return spans;
}

}  // namespace detail

// Glorot-uniform weights, zero biases.  Draw order is fixed (layer by layer,
// weights row-major) so a given seed yields the same start point everywhere.
inline ParamVector init_params(const NetworkConfig& c, std::uint64_t seed) {
  ParamVector pv = make_param_vector(make_layout(c));
  std::mt19937_64 eng(seed);
  auto uniform01 = [&eng]() { return (eng() >> 11) * 0x1.0p-53; };
  const auto spans = detail::layer_spans(c);
  for (const auto& s : spans) {
    const double bound = std::sqrt(6.0 / (s.cols + s.rows));
    for (long i = 0; i < static_cast<long>(s.rows) * s.cols; ++i)
      pv.data[static_cast<std::size_t>(s.w_off + i)] = bound * (2.0 * uniform01() - 1.0);
  }
  return pv;
}

// Points are pushed through the network in fixed-size lane blocks so the
// per-layer matvecs vectorize; all kLanes lanes are always computed and the
// caller ignores inactive ones.
inline constexpr int kLanes = 16;

namespace detail {

// Fixed-order pairwise sum over one lane block; the tree shape keeps the
// inner dot products vectorizable without changing results between runs.
template <typename S>
inline S lane_reduce(S* t) {
  for (int stride = kLanes / 2; stride > 0; stride /= 2)
    for (int q = 0; q < stride; ++q) t[q] += t[q + stride];
  return t[0];
}

// ---- lane-block kernels, generic scalar versions ----
// Layout contract for every kernel below: h/hd/a/zd/z and the adjoint
// buffers are [unit][lane] with kLanes lanes, weights are row-major.

template <typename S>
inline void layer0_forward(int W, const double* __restrict ts, const S* __restrict w0,
                           const S* __restrict b0, S* __restrict z, S* __restrict zd) {
  constexpr int B = kLanes;
  for (int i = 0; i < W; ++i) {
    const S wi = w0[i];
    const S bi = b0[i];
    for (int q = 0; q < B; ++q) {
      z[i * B + q] = wi * ts[q] + bi;
      zd[i * B + q] = wi;
    }
  }
}

// z[i][q] = bias[i] + sum_j w[i][j] h[j][q];  zd[i][q] = sum_j w[i][j] hd[j][q]
template <typename S>
inline void matvec_pair(int rows, int cols, const S* __restrict w, const S* __restrict bias,
                        const S* __restrict h, const S* __restrict hd, S* __restrict z,
                        S* __restrict zd) {
  constexpr int B = kLanes;
  for (int i = 0; i < rows; ++i) {
    S zacc[B], zdacc[B];
    const S bi = bias[i];
    for (int q = 0; q < B; ++q) {
      zacc[q] = bi;
      zdacc[q] = S(0);
    }
    const S* __restrict wrow = w + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      const S wij = wrow[j];
      const S* __restrict hj = h + j * B;
      const S* __restrict hdj = hd + j * B;
      for (int q = 0; q < B; ++q) {
        zacc[q] += wij * hj[q];
        zdacc[q] += wij * hdj[q];
      }
    }
    for (int q = 0; q < B; ++q) {
      z[i * B + q] = zacc[q];
      zd[i * B + q] = zdacc[q];
    }
  }
}

// In place over one layer slab: a <- tanh(z), h <- a (+ h_prev when skip),
// hd <- (1 - a^2) zd (+ hd_prev when skip).  `a` holds z on entry.
template <typename S>
inline void activate(int count, bool skip, const S* __restrict hp, const S* __restrict hdp,
                     S* __restrict a, const S* __restrict zd, S* __restrict h,
                     S* __restrict hd) {
  using std::tanh;
  const S one = S(1);
  for (int ix = 0; ix < count; ++ix) {
    const S av = tanh(a[ix]);
    const S sv = one - av * av;
    a[ix] = av;
    const S hdv = sv * zd[ix];
    if (skip) {
      h[ix] = hp[ix] + av;
      hd[ix] = hdp[ix] + hdv;
    } else {
      h[ix] = av;
      hd[ix] = hdv;
    }
  }
}

// zbar = s hbar - 2 a s zd hdbar;  zdbar = s hdbar;  s = 1 - a^2
template <typename S>
inline void backward_prep(int count, const S* __restrict a, const S* __restrict zd,
                          const S* __restrict hbar, const S* __restrict hdbar,
                          S* __restrict zbar, S* __restrict zdbar) {
  const S one = S(1);
  const S two = S(2);
  for (int ix = 0; ix < count; ++ix) {
    const S av = a[ix];
    const S sv = one - av * av;
    zbar[ix] = sv * hbar[ix] - two * av * sv * zd[ix] * hdbar[ix];
    zdbar[ix] = sv * hdbar[ix];
  }
}

// gw[i][j] += sum_q zb[i][q] h[j][q] + zdb[i][q] hd[j][q];  gb[i] += sum_q zb[i][q]
template <typename S>
inline void backward_weights(int rows, int cols, const S* __restrict zb, const S* __restrict zdb,
                             const S* __restrict h, const S* __restrict hd, S* __restrict gw,
                             S* __restrict gb) {
  constexpr int B = kLanes;
  for (int i = 0; i < rows; ++i) {
    const S* __restrict zbi = zb + i * B;
    const S* __restrict zdbi = zdb + i * B;
    S bacc = S(0);
    for (int q = 0; q < B; ++q) bacc += zbi[q];
    gb[i] += bacc;
    S* __restrict gwrow = gw + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      const S* __restrict hj = h + j * B;
      const S* __restrict hdj = hd + j * B;
      S tmp[B];
      for (int q = 0; q < B; ++q) tmp[q] = zbi[q] * hj[q] + zdbi[q] * hdj[q];
      gwrow[j] += lane_reduce(tmp);
    }
  }
}

// hb[j][q] += sum_i w[i][j] zb[i][q];  hdb[j][q] += sum_i w[i][j] zdb[i][q]
template <typename S>
inline void backward_adjoint(int rows, int cols, const S* __restrict w, const S* __restrict zb,
                             const S* __restrict zdb, S* __restrict hb, S* __restrict hdb) {
  constexpr int B = kLanes;
  for (int i = 0; i < rows; ++i) {
    const S* __restrict zbi = zb + i * B;
    const S* __restrict zdbi = zdb + i * B;
    const S* __restrict wrow = w + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      const S wij = wrow[j];
      S* __restrict hbj = hb + j * B;
      S* __restrict hdbj = hdb + j * B;
      for (int q = 0; q < B; ++q) {
        hbj[q] += wij * zbi[q];
        hdbj[q] += wij * zdbi[q];
      }
    }
  }
}

// gw[i] += sum_q zbar[i][q] ts[q] + zdbar[i][q];  gb[i] += sum_q zbar[i][q]
template <typename S>
inline void layer0_backward(int W, const double* __restrict ts, const S* __restrict zbar,
                            const S* __restrict zdbar, S* __restrict gw, S* __restrict gb) {
  constexpr int B = kLanes;
  for (int i = 0; i < W; ++i) {
    S wacc = S(0);
    S bacc = S(0);
    for (int q = 0; q < B; ++q) {
      const S zbv = zbar[i * B + q];
      wacc += zbv * ts[q] + zdbar[i * B + q];
      bacc += zbv;
    }
    gw[i] += wacc;
    gb[i] += bacc;
  }
}

#if PINNODE_HAVE_VEC

// ---- double fast paths; same contracts and same per-lane accumulation
// order as the generic kernels, with rows blocked by four where it pays ----

inline void layer0_forward(int W, const double* __restrict ts, const double* __restrict w0,
                           const double* __restrict b0, double* __restrict z,
                           double* __restrict zd) {
  constexpr int B = kLanes;
  const vd8 t0 = vload(ts);
  const vd8 t1 = vload(ts + 8);
  for (int i = 0; i < W; ++i) {
    const vd8 wv = vsplat(w0[i]);
    const vd8 bv = vsplat(b0[i]);
    vstore(z + i * B, wv * t0 + bv);
    vstore(z + i * B + 8, wv * t1 + bv);
    vstore(zd + i * B, wv);
    vstore(zd + i * B + 8, wv);
  }
}

inline void matvec_pair(int rows, int cols, const double* __restrict w,
                        const double* __restrict bias, const double* __restrict h,
                        const double* __restrict hd, double* __restrict z,
                        double* __restrict zd) {
  constexpr int B = kLanes;
  int i = 0;
  for (; i + 4 <= rows; i += 4) {
    const double* __restrict w0 = w + static_cast<std::size_t>(i) * cols;
    const double* __restrict w1 = w0 + cols;
    const double* __restrict w2 = w1 + cols;
    const double* __restrict w3 = w2 + cols;
    vd8 z00 = vsplat(bias[i]), z01 = z00, d00 = vsplat(0.0), d01 = d00;
    vd8 z10 = vsplat(bias[i + 1]), z11 = z10, d10 = vsplat(0.0), d11 = d10;
    vd8 z20 = vsplat(bias[i + 2]), z21 = z20, d20 = vsplat(0.0), d21 = d20;
    vd8 z30 = vsplat(bias[i + 3]), z31 = z30, d30 = vsplat(0.0), d31 = d30;
    for (int j = 0; j < cols; ++j) {
      const vd8 h0 = vload(h + j * B);
      const vd8 h1 = vload(h + j * B + 8);
      const vd8 g0 = vload(hd + j * B);
      const vd8 g1 = vload(hd + j * B + 8);
      vd8 wv = vsplat(w0[j]);
      z00 += wv * h0;
      z01 += wv * h1;
      d00 += wv * g0;
      d01 += wv * g1;
      wv = vsplat(w1[j]);
      z10 += wv * h0;
      z11 += wv * h1;
      d10 += wv * g0;
      d11 += wv * g1;
      wv = vsplat(w2[j]);
      z20 += wv * h0;
      z21 += wv * h1;
      d20 += wv * g0;
      d21 += wv * g1;
      wv = vsplat(w3[j]);
      z30 += wv * h0;
      z31 += wv * h1;
      d30 += wv * g0;
      d31 += wv * g1;
    }
    vstore(z + (i + 0) * B, z00);
    vstore(z + (i + 0) * B + 8, z01);
    vstore(z + (i + 1) * B, z10);
    vstore(z + (i + 1) * B + 8, z11);
    vstore(z + (i + 2) * B, z20);
    vstore(z + (i + 2) * B + 8, z21);
    vstore(z + (i + 3) * B, z30);
    vstore(z + (i + 3) * B + 8, z31);
    vstore(zd + (i + 0) * B, d00);
    vstore(zd + (i + 0) * B + 8, d01);
    vstore(zd + (i + 1) * B, d10);
    vstore(zd + (i + 1) * B + 8, d11);
    vstore(zd + (i + 2) * B, d20);
    vstore(zd + (i + 2) * B + 8, d21);
    vstore(zd + (i + 3) * B, d30);
    vstore(zd + (i + 3) * B + 8, d31);
  }
  for (; i < rows; ++i) {
    const double* __restrict wrow = w + static_cast<std::size_t>(i) * cols;
    vd8 z0 = vsplat(bias[i]), z1 = z0, d0 = vsplat(0.0), d1 = d0;
    for (int j = 0; j < cols; ++j) {
      const vd8 wv = vsplat(wrow[j]);
      z0 += wv * vload(h + j * B);
      z1 += wv * vload(h + j * B + 8);
      d0 += wv * vload(hd + j * B);
      d1 += wv * vload(hd + j * B + 8);
    }
    vstore(z + i * B, z0);
    vstore(z + i * B + 8, z1);
    vstore(zd + i * B, d0);
    vstore(zd + i * B + 8, d1);
  }
}

inline void activate(int count, bool skip, const double* __restrict hp,
                     const double* __restrict hdp, double* __restrict a,
                     const double* __restrict zd, double* __restrict h, double* __restrict hd) {
  const vd8 one = vsplat(1.0);
  for (int ix = 0; ix < count; ix += 8) {
    const vd8 av = vtanh(vload(a + ix));
    const vd8 sv = one - av * av;
    vstore(a + ix, av);
    const vd8 hdv = sv * vload(zd + ix);
    if (skip) {
      vstore(h + ix, vload(hp + ix) + av);
      vstore(hd + ix, vload(hdp + ix) + hdv);
    } else {
      vstore(h + ix, av);
      vstore(hd + ix, hdv);
    }
  }
}

inline void backward_prep(int count, const double* __restrict a, const double* __restrict zd,
                          const double* __restrict hbar, const double* __restrict hdbar,
                          double* __restrict zbar, double* __restrict zdbar) {
  const vd8 one = vsplat(1.0);
  const vd8 two = vsplat(2.0);
  for (int ix = 0; ix < count; ix += 8) {
    const vd8 av = vload(a + ix);
    const vd8 sv = one - av * av;
    const vd8 hbv = vload(hbar + ix);
    const vd8 hdbv = vload(hdbar + ix);
    vstore(zbar + ix, sv * hbv - two * av * sv * vload(zd + ix) * hdbv);
    vstore(zdbar + ix, sv * hdbv);
  }
}

inline void backward_weights(int rows, int cols, const double* __restrict zb,
                             const double* __restrict zdb, const double* __restrict h,
                             const double* __restrict hd, double* __restrict gw,
                             double* __restrict gb) {
  constexpr int B = kLanes;
  int i = 0;
  for (; i + 4 <= rows; i += 4) {
    const vd8 p00 = vload(zb + (i + 0) * B), p01 = vload(zb + (i + 0) * B + 8);
    const vd8 p10 = vload(zb + (i + 1) * B), p11 = vload(zb + (i + 1) * B + 8);
    const vd8 p20 = vload(zb + (i + 2) * B), p21 = vload(zb + (i + 2) * B + 8);
    const vd8 p30 = vload(zb + (i + 3) * B), p31 = vload(zb + (i + 3) * B + 8);
    const vd8 q00 = vload(zdb + (i + 0) * B), q01 = vload(zdb + (i + 0) * B + 8);
    const vd8 q10 = vload(zdb + (i + 1) * B), q11 = vload(zdb + (i + 1) * B + 8);
    const vd8 q20 = vload(zdb + (i + 2) * B), q21 = vload(zdb + (i + 2) * B + 8);
    const vd8 q30 = vload(zdb + (i + 3) * B), q31 = vload(zdb + (i + 3) * B + 8);
    gb[i + 0] += vsum(p00 + p01);
    gb[i + 1] += vsum(p10 + p11);
    gb[i + 2] += vsum(p20 + p21);
    gb[i + 3] += vsum(p30 + p31);
    double* __restrict g0 = gw + static_cast<std::size_t>(i) * cols;
    double* __restrict g1 = g0 + cols;
    double* __restrict g2 = g1 + cols;
    double* __restrict g3 = g2 + cols;
    for (int j = 0; j < cols; ++j) {
      const vd8 h0 = vload(h + j * B);
      const vd8 h1 = vload(h + j * B + 8);
      const vd8 f0 = vload(hd + j * B);
      const vd8 f1 = vload(hd + j * B + 8);
      g0[j] += vsum(p00 * h0 + p01 * h1 + q00 * f0 + q01 * f1);
      g1[j] += vsum(p10 * h0 + p11 * h1 + q10 * f0 + q11 * f1);
      g2[j] += vsum(p20 * h0 + p21 * h1 + q20 * f0 + q21 * f1);
      g3[j] += vsum(p30 * h0 + p31 * h1 + q30 * f0 + q31 * f1);
    }
  }
  for (; i < rows; ++i) {
    const vd8 p0 = vload(zb + i * B), p1 = vload(zb + i * B + 8);
    const vd8 q0 = vload(zdb + i * B), q1 = vload(zdb + i * B + 8);
    gb[i] += vsum(p0 + p1);
    double* __restrict gwrow = gw + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      const vd8 t = p0 * vload(h + j * B) + p1 * vload(h + j * B + 8) +
                    q0 * vload(hd + j * B) + q1 * vload(hd + j * B + 8);
      gwrow[j] += vsum(t);
    }
  }
}

inline void backward_adjoint(int rows, int cols, const double* __restrict w,
                             const double* __restrict zb, const double* __restrict zdb,
                             double* __restrict hb, double* __restrict hdb) {
  constexpr int B = kLanes;
  int i = 0;
  for (; i + 4 <= rows; i += 4) {
    const vd8 p00 = vload(zb + (i + 0) * B), p01 = vload(zb + (i + 0) * B + 8);
    const vd8 p10 = vload(zb + (i + 1) * B), p11 = vload(zb + (i + 1) * B + 8);
    const vd8 p20 = vload(zb + (i + 2) * B), p21 = vload(zb + (i + 2) * B + 8);
    const vd8 p30 = vload(zb + (i + 3) * B), p31 = vload(zb + (i + 3) * B + 8);
    const vd8 q00 = vload(zdb + (i + 0) * B), q01 = vload(zdb + (i + 0) * B + 8);
    const vd8 q10 = vload(zdb + (i + 1) * B), q11 = vload(zdb + (i + 1) * B + 8);
    const vd8 q20 = vload(zdb + (i + 2) * B), q21 = vload(zdb + (i + 2) * B + 8);
    const vd8 q30 = vload(zdb + (i + 3) * B), q31 = vload(zdb + (i + 3) * B + 8);
    const double* __restrict w0 = w + static_cast<std::size_t>(i) * cols;
    const double* __restrict w1 = w0 + cols;
    const double* __restrict w2 = w1 + cols;
    const double* __restrict w3 = w2 + cols;
    for (int j = 0; j < cols; ++j) {
      vd8 b0 = vload(hb + j * B);
      vd8 b1 = vload(hb + j * B + 8);
      vd8 c0 = vload(hdb + j * B);
      vd8 c1 = vload(hdb + j * B + 8);
      vd8 wv = vsplat(w0[j]);
      b0 += wv * p00;
      b1 += wv * p01;
      c0 += wv * q00;
      c1 += wv * q01;
      wv = vsplat(w1[j]);
      b0 += wv * p10;
      b1 += wv * p11;
      c0 += wv * q10;
      c1 += wv * q11;
      wv = vsplat(w2[j]);
      b0 += wv * p20;
      b1 += wv * p21;
      c0 += wv * q20;
      c1 += wv * q21;
      wv = vsplat(w3[j]);
      b0 += wv * p30;
      b1 += wv * p31;
      c0 += wv * q30;
      c1 += wv * q31;
      vstore(hb + j * B, b0);
      vstore(hb + j * B + 8, b1);
      vstore(hdb + j * B, c0);
      vstore(hdb + j * B + 8, c1);
    }
  }
  for (; i < rows; ++i) {
    const vd8 p0 = vload(zb + i * B), p1 = vload(zb + i * B + 8);
    const vd8 q0 = vload(zdb + i * B), q1 = vload(zdb + i * B + 8);
    const double* __restrict wrow = w + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      const vd8 wv = vsplat(wrow[j]);
      vstore(hb + j * B, vload(hb + j * B) + wv * p0);
      vstore(hb + j * B + 8, vload(hb + j * B + 8) + wv * p1);
      vstore(hdb + j * B, vload(hdb + j * B) + wv * q0);
      vstore(hdb + j * B + 8, vload(hdb + j * B + 8) + wv * q1);
    }
  }
}

inline void layer0_backward(int W, const double* __restrict ts, const double* __restrict zbar,
                            const double* __restrict zdbar, double* __restrict gw,
                            double* __restrict gb) {
  constexpr int B = kLanes;
  const vd8 t0 = vload(ts);
  const vd8 t1 = vload(ts + 8);
  for (int i = 0; i < W; ++i) {
    const vd8 zb0 = vload(zbar + i * B), zb1 = vload(zbar + i * B + 8);
    const vd8 zdb0 = vload(zdbar + i * B), zdb1 = vload(zdbar + i * B + 8);
    gw[i] += vsum(zb0 * t0 + zb1 * t1 + zdb0 + zdb1);
    gb[i] += vsum(zb0 + zb1);
  }
}

#endif  // PINNODE_HAVE_VEC

}  // namespace detail

template <typename S>
struct BatchWorkspace {
  int depth = 0, width = 0, out_dim = 0;
  std::vector<detail::LayerSpan> spans;
  std::array<double, kLanes> ts{};

  // forward records, [layer][unit][lane]
  std::vector<S> h, hd, a, zd;
  // outputs and their adjoint seeds, [unit][lane]
  std::vector<S> u, ud, ubar, udbar, r;
  // backward scratch, [unit][lane]
  std::vector<S> hbar, hdbar, zbar, zdbar;

  void resize(const NetworkConfig& c) {
    validate(c);
    depth = c.depth;
    width = c.width;
    out_dim = c.output_dim;
    spans = detail::layer_spans(c);
    const std::size_t hidden = static_cast<std::size_t>(depth) * width * kLanes;
    const std::size_t out = static_cast<std::size_t>(out_dim) * kLanes;
    const std::size_t row = static_cast<std::size_t>(width) * kLanes;
    h.assign(hidden, S(0));
    hd.assign(hidden, S(0));
    a.assign(hidden, S(0));
    zd.assign(hidden, S(0));
    u.assign(out, S(0));
    ud.assign(out, S(0));
    ubar.assign(out, S(0));
    udbar.assign(out, S(0));
    r.assign(out, S(0));
    hbar.assign(row, S(0));
    hdbar.assign(row, S(0));
    zbar.assign(row, S(0));
    zdbar.assign(row, S(0));
  }

  S* layer(std::vector<S>& v, int k) { return v.data() + static_cast<std::size_t>(k) * width * kLanes; }
  const S* layer(const std::vector<S>& v, int k) const {
    return v.data() + static_cast<std::size_t>(k) * width * kLanes;
  }
};

// Extended forward map t -> (u(t), u_t(t)) for one lane block.  The input
// tangent is propagated alongside activations: zd tracks dz/dt, hd tracks
// dh/dt.  Intermediate values stay in ws for the backward pass.
template <typename S>
void extended_forward_batch(const NetworkConfig& cfg, std::span<const S> params,
                            BatchWorkspace<S>& ws) {
  constexpr int B = kLanes;
  const int W = cfg.width, L = cfg.depth, N = cfg.output_dim;
  const S* p = params.data();
  const auto& spans = ws.spans;
  const bool skip = cfg.arch == Arch::ResNet;

  detail::layer0_forward(W, ws.ts.data(), p + spans[0].w_off, p + spans[0].b_off,
                         ws.layer(ws.a, 0), ws.layer(ws.zd, 0));
  detail::activate(W * B, false, static_cast<const S*>(nullptr), static_cast<const S*>(nullptr),
                   ws.layer(ws.a, 0), ws.layer(ws.zd, 0), ws.layer(ws.h, 0),
                   ws.layer(ws.hd, 0));
  for (int k = 1; k < L; ++k) {
    detail::matvec_pair(W, W, p + spans[k].w_off, p + spans[k].b_off, ws.layer(ws.h, k - 1),
                        ws.layer(ws.hd, k - 1), ws.layer(ws.a, k), ws.layer(ws.zd, k));
    detail::activate(W * B, skip, ws.layer(ws.h, k - 1), ws.layer(ws.hd, k - 1),
                     ws.layer(ws.a, k), ws.layer(ws.zd, k), ws.layer(ws.h, k),
                     ws.layer(ws.hd, k));
  }
  detail::matvec_pair(N, W, p + spans[L].w_off, p + spans[L].b_off, ws.layer(ws.h, L - 1),
                      ws.layer(ws.hd, L - 1), ws.u.data(), ws.ud.data());
}

// Reverse pass through the extended map.  Seeds are read from ws.ubar and
// ws.udbar (adjoints of u and u_t); parameter adjoints are accumulated into
// grad, which must use the same layout as params.
template <typename S>
void extended_backward_batch(const NetworkConfig& cfg, std::span<const S> params,
                             BatchWorkspace<S>& ws, std::span<S> grad) {
  constexpr int B = kLanes;
  const int W = cfg.width, L = cfg.depth, N = cfg.output_dim;
  const S* p = params.data();
  S* g = grad.data();
  const auto& spans = ws.spans;

  std::fill(ws.hbar.begin(), ws.hbar.end(), S(0));
  std::fill(ws.hdbar.begin(), ws.hdbar.end(), S(0));

  detail::backward_weights(N, W, ws.ubar.data(), ws.udbar.data(), ws.layer(ws.h, L - 1),
                           ws.layer(ws.hd, L - 1), g + spans[L].w_off, g + spans[L].b_off);
  detail::backward_adjoint(N, W, p + spans[L].w_off, ws.ubar.data(), ws.udbar.data(),
                           ws.hbar.data(), ws.hdbar.data());

  for (int k = L - 1; k >= 1; --k) {
    detail::backward_prep(W * B, ws.layer(ws.a, k), ws.layer(ws.zd, k), ws.hbar.data(),
                          ws.hdbar.data(), ws.zbar.data(), ws.zdbar.data());
    if (cfg.arch != Arch::ResNet) {
      // no skip path, so the previous layer's adjoint is rebuilt from scratch
      std::fill(ws.hbar.begin(), ws.hbar.end(), S(0));
      std::fill(ws.hdbar.begin(), ws.hdbar.end(), S(0));
    }
    detail::backward_weights(W, W, ws.zbar.data(), ws.zdbar.data(), ws.layer(ws.h, k - 1),
                             ws.layer(ws.hd, k - 1), g + spans[k].w_off, g + spans[k].b_off);
    detail::backward_adjoint(W, W, p + spans[k].w_off, ws.zbar.data(), ws.zdbar.data(),
                             ws.hbar.data(), ws.hdbar.data());
  }

  detail::backward_prep(W * B, ws.layer(ws.a, 0), ws.layer(ws.zd, 0), ws.hbar.data(),
                        ws.hdbar.data(), ws.zbar.data(), ws.zdbar.data());
  detail::layer0_backward(W, ws.ts.data(), ws.zbar.data(), ws.zdbar.data(), g + spans[0].w_off,
                          g + spans[0].b_off);
}

// Per-layer snapshot of one extended forward evaluation at a single point.
struct EvalRecord {
  double input = 0.0;
  int depth = 0, width = 0, out_dim = 0;
  std::vector<double> h, hd, a, zd;  // [layer][unit]
  std::vector<double> u, ud;
};

struct TangentEval {
  std::vector<double> u;
  std::vector<double> u_t;
  EvalRecord record;
};

// Evaluates u(t) and du/dt at one point and returns the layer records.
inline TangentEval eval_with_input_tangent(const NetworkConfig& cfg, const ParamVector& params,
                                           double t) {
  validate(cfg);
  if (params.size() != param_count(cfg))
    throw config_error("parameter vector size does not match network config");
  BatchWorkspace<double> ws;
  ws.resize(cfg);
  ws.ts.fill(0.0);
  ws.ts[0] = t;
  extended_forward_batch<double>(cfg, params.data, ws);

  TangentEval out;
  out.record.input = t;
  out.record.depth = cfg.depth;
  out.record.width = cfg.width;
  out.record.out_dim = cfg.output_dim;
  const std::size_t hidden = static_cast<std::size_t>(cfg.depth) * cfg.width;
  out.record.h.resize(hidden);
  out.record.hd.resize(hidden);
  out.record.a.resize(hidden);
  out.record.zd.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    out.record.h[i] = ws.h[i * kLanes];
    out.record.hd[i] = ws.hd[i * kLanes];
    out.record.a[i] = ws.a[i * kLanes];
    out.record.zd[i] = ws.zd[i * kLanes];
  }
  out.u.resize(cfg.output_dim);
  out.u_t.resize(cfg.output_dim);
  for (int i = 0; i < cfg.output_dim; ++i) {
    out.u[i] = ws.u[static_cast<std::size_t>(i) * kLanes];
    out.u_t[i] = ws.ud[static_cast<std::size_t>(i) * kLanes];
  }
  out.record.u = out.u;
  out.record.ud = out.u_t;
  return out;
}

inline std::vector<double> forward(const NetworkConfig& cfg, const ParamVector& params, double t) {
  return eval_with_input_tangent(cfg, params, t).u;
}

// Recomputes the output layer from a stored record.  The accumulation order
// matches the lane kernels, so the replayed values equal the original forward
// evaluation bit for bit and records are safe to cache.
inline std::vector<double> replay_output(const NetworkConfig& cfg, const ParamVector& params,
                                         const EvalRecord& rec) {
  if (rec.depth != cfg.depth || rec.width != cfg.width || rec.out_dim != cfg.output_dim)
    throw config_error("record shape does not match network config");
  const auto spans = detail::layer_spans(cfg);
  const auto& sp = spans[cfg.depth];
  const double* w = params.data.data() + sp.w_off;
  const double* b = params.data.data() + sp.b_off;
  const double* hl = rec.h.data() + static_cast<std::size_t>(cfg.depth - 1) * cfg.width;
  std::vector<double> u(cfg.output_dim);
  for (int i = 0; i < cfg.output_dim; ++i) {
    double acc = b[i];
    const double* wrow = w + static_cast<std::size_t>(i) * cfg.width;
    for (int j = 0; j < cfg.width; ++j) acc += wrow[j] * hl[j];
    u[i] = acc;
  }
  return u;
}

}  // namespace pinnode
