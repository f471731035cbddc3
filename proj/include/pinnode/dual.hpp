#pragma once

#include <cmath>

namespace pinnode {

// First-order dual number: value + tangent.  Arithmetic on Dual propagates
// directional derivatives through any templated scalar code path.
template <typename T = double>
struct Dual {
  T value{};
  T tangent{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v), tangent(T(0)) {}
  constexpr Dual(T v, T d) : value(v), tangent(d) {}

  constexpr Dual& operator+=(const Dual& o) {
    value += o.value;
    tangent += o.tangent;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    value -= o.value;
    tangent -= o.tangent;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    tangent = tangent * o.value + value * o.tangent;
    value *= o.value;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const T inv = T(1) / o.value;
    value *= inv;
    tangent = (tangent - value * o.tangent) * inv;
    return *this;
  }
};

using DualScalar = Dual<double>;

template <typename T>
constexpr Dual<T> operator+(Dual<T> a, const Dual<T>& b) {
  return a += b;
}
template <typename T>
constexpr Dual<T> operator-(Dual<T> a, const Dual<T>& b) {
  return a -= b;
}
template <typename T>
constexpr Dual<T> operator*(Dual<T> a, const Dual<T>& b) {
  return a *= b;
}
template <typename T>
constexpr Dual<T> operator/(Dual<T> a, const Dual<T>& b) {
  return a /= b;
}

template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a) {
  return {-a.value, -a.tangent};
}
template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a) {
  return a;
}

// Mixed scalar/dual arithmetic keeps the scalar in the value slot.
template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a, T b) {
  return {a.value + b, a.tangent};
}
template <typename T>
constexpr Dual<T> operator+(T a, const Dual<T>& b) {
  return {a + b.value, b.tangent};
}
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a, T b) {
  return {a.value - b, a.tangent};
}
template <typename T>
constexpr Dual<T> operator-(T a, const Dual<T>& b) {
  return {a - b.value, -b.tangent};
}
template <typename T>
constexpr Dual<T> operator*(const Dual<T>& a, T b) {
  return {a.value * b, a.tangent * b};
}
template <typename T>
constexpr Dual<T> operator*(T a, const Dual<T>& b) {
  return {a * b.value, a * b.tangent};
}
template <typename T>
constexpr Dual<T> operator/(const Dual<T>& a, T b) {
  return {a.value / b, a.tangent / b};
}
template <typename T>
constexpr Dual<T> operator/(T a, const Dual<T>& b) {
  const T inv = T(1) / b.value;
  const T v = a * inv;
  return {v, -v * b.tangent * inv};
}

template <typename T>
constexpr Dual<T>& operator+=(Dual<T>& a, T b) {
  a.value += b;
  return a;
}
template <typename T>
constexpr Dual<T>& operator-=(Dual<T>& a, T b) {
  a.value -= b;
  return a;
}
template <typename T>
constexpr Dual<T>& operator*=(Dual<T>& a, T b) {
  a.value *= b;
  a.tangent *= b;
  return a;
}

template <typename T>
constexpr bool operator==(const Dual<T>& a, const Dual<T>& b) {
  return a.value == b.value && a.tangent == b.tangent;
}

template <typename T>
inline Dual<T> tanh(const Dual<T>& x) {
  using std::tanh;
  const T t = tanh(x.value);
  return {t, (T(1) - t * t) * x.tangent};
}

template <typename T>
inline Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  const T e = exp(x.value);
  return {e, e * x.tangent};
}

template <typename T>
inline Dual<T> sin(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {sin(x.value), cos(x.value) * x.tangent};
}

template <typename T>
inline Dual<T> cos(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {cos(x.value), -sin(x.value) * x.tangent};
}

template <typename T>
inline Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  const T s = sqrt(x.value);
  return {s, x.tangent / (T(2) * s)};
}

template <typename T>
inline bool isfinite(const Dual<T>& x) {
  using std::isfinite;
  return isfinite(x.value) && isfinite(x.tangent);
}

// Value part of a generic scalar (identity for plain floating point).
inline double scalar_value(double x) { return x; }
template <typename T>
inline T scalar_value(const Dual<T>& x) {
  return x.value;
}

}  // namespace pinnode
