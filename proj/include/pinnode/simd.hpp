#pragma once

#include <cmath>

// Hand-vectorized lane kernels for the double-precision fast path.  GCC and
// Clang lower 512-bit generic vectors to whatever the target supports, so the
// only hard requirement is the GNU vector extension; the libmvec tanh entry
// point additionally needs AVX-512 and glibc 2.35+.
#if (defined(__GNUC__) || defined(__clang__)) && defined(__x86_64__) && !defined(PINNODE_NO_SIMD)
#define PINNODE_HAVE_VEC 1
#else
#define PINNODE_HAVE_VEC 0
#endif

#if PINNODE_HAVE_VEC && defined(__AVX512F__) && defined(__GLIBC__) && \
    (__GLIBC__ > 2 || (__GLIBC__ == 2 && __GLIBC_MINOR__ >= 35)) &&    \
    !defined(PINNODE_NO_LIBMVEC)
#define PINNODE_HAVE_VEC_TANH 1
#else
#define PINNODE_HAVE_VEC_TANH 0
#endif

#if PINNODE_HAVE_VEC

namespace pinnode::detail {

typedef double vd8 __attribute__((vector_size(64), aligned(8), may_alias));
typedef long long vi8 __attribute__((vector_size(64)));

#if PINNODE_HAVE_VEC_TANH
extern "C" vd8 pinnode_vec_tanh(vd8) asm("_ZGVeN8v_tanh");
#endif

inline vd8 vsplat(double x) { return vd8{x, x, x, x, x, x, x, x}; }

// The aligned(8) typedef makes plain dereference legal for any double*.
inline vd8 vload(const double* p) { return *reinterpret_cast<const vd8*>(p); }
inline void vstore(double* p, vd8 v) { *reinterpret_cast<vd8*>(p) = v; }

inline double vsum(vd8 v) {
  vd8 t = v + __builtin_shuffle(v, vi8{4, 5, 6, 7, 0, 1, 2, 3});
  t = t + __builtin_shuffle(t, vi8{2, 3, 0, 1, 6, 7, 4, 5});
  t = t + __builtin_shuffle(t, vi8{1, 0, 3, 2, 5, 4, 7, 6});
  return t[0];
}

inline vd8 vtanh(vd8 x) {
#if PINNODE_HAVE_VEC_TANH
  return pinnode_vec_tanh(x);
#else
  vd8 r;
  for (int q = 0; q < 8; ++q) r[q] = std::tanh(x[q]);
  return r;
#endif
}

}  // namespace pinnode::detail

#endif  // PINNODE_HAVE_VEC
