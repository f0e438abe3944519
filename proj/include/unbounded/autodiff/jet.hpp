#pragma once

#include <cmath>
#include <type_traits>
#include <utility>

#include "unbounded/autodiff/tape.hpp"

namespace unbounded::autodiff {

/// Second-order forward-mode value in two spatial variables: the value and
/// its first and pure second derivatives in x and y. The mixed derivative is
/// not carried. Coefficients may be plain doubles or TapeScalars, which makes
/// every spatial derivative differentiable with respect to network
/// parameters (forward-over-reverse).
template <class T>
struct Jet2 {
  T v{};
  T dx{};
  T dy{};
  T dxx{};
  T dyy{};

  static Jet2 constant(T c) { return Jet2{std::move(c), T{}, T{}, T{}, T{}}; }
  static Jet2 seed_x(T x) { return Jet2{std::move(x), T(1.0), T{}, T{}, T{}}; }
  static Jet2 seed_y(T y) { return Jet2{std::move(y), T{}, T(1.0), T{}, T{}}; }
};

namespace jet_detail {

using std::cos;
using std::exp;
using std::sin;
using std::tanh;

/// phi applied to a jet, given phi(v), phi'(v), phi''(v).
template <class T>
Jet2<T> chain(const Jet2<T>& a, T f0, const T& f1, const T& f2) {
  Jet2<T> r;
  r.v = std::move(f0);
  r.dx = f1 * a.dx;
  r.dy = f1 * a.dy;
  r.dxx = f2 * (a.dx * a.dx) + f1 * a.dxx;
  r.dyy = f2 * (a.dy * a.dy) + f1 * a.dyy;
  return r;
}

template <class T>
T sigmoid(const T& x) {
  return T(1.0) / (T(1.0) + exp(-x));
}

inline double silu_value(double x) { return silu(x); }
inline TapeScalar silu_value(const TapeScalar& x) { return silu(x); }

}  // namespace jet_detail

template <class T>
Jet2<T> operator+(const Jet2<T>& a, const Jet2<T>& b) {
  return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dyy + b.dyy};
}

template <class T>
Jet2<T> operator-(const Jet2<T>& a, const Jet2<T>& b) {
  return {a.v - b.v, a.dx - b.dx, a.dy - b.dy, a.dxx - b.dxx, a.dyy - b.dyy};
}

template <class T>
Jet2<T> operator-(const Jet2<T>& a) {
  return {-a.v, -a.dx, -a.dy, -a.dxx, -a.dyy};
}

template <class T>
Jet2<T> operator*(const Jet2<T>& a, const Jet2<T>& b) {
  Jet2<T> r;
  r.v = a.v * b.v;
  r.dx = a.dx * b.v + a.v * b.dx;
  r.dy = a.dy * b.v + a.v * b.dy;
  r.dxx = a.dxx * b.v + T(2.0) * (a.dx * b.dx) + a.v * b.dxx;
  r.dyy = a.dyy * b.v + T(2.0) * (a.dy * b.dy) + a.v * b.dyy;
  return r;
}

template <class T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b) {
  using jet_detail::chain;
  // a * (1/b); 1/b via the chain rule with phi(t) = 1/t.
  const T inv = T(1.0) / b.v;
  const T inv2 = inv * inv;
  return a * chain(b, inv, -inv2, T(2.0) * inv2 * inv);
}

// Scalar (parameter-typed) operands act on every component linearly.
template <class T>
Jet2<T> operator*(const Jet2<T>& a, const std::type_identity_t<T>& s) {
  return {a.v * s, a.dx * s, a.dy * s, a.dxx * s, a.dyy * s};
}
template <class T>
Jet2<T> operator*(const std::type_identity_t<T>& s, const Jet2<T>& a) {
  return {s * a.v, s * a.dx, s * a.dy, s * a.dxx, s * a.dyy};
}
template <class T>
Jet2<T> operator+(const Jet2<T>& a, const std::type_identity_t<T>& s) {
  return {a.v + s, a.dx, a.dy, a.dxx, a.dyy};
}
template <class T>
Jet2<T> operator+(const std::type_identity_t<T>& s, const Jet2<T>& a) {
  return {s + a.v, a.dx, a.dy, a.dxx, a.dyy};
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a, const std::type_identity_t<T>& s) {
  return {a.v - s, a.dx, a.dy, a.dxx, a.dyy};
}
template <class T>
Jet2<T> operator-(const std::type_identity_t<T>& s, const Jet2<T>& a) {
  return {s - a.v, -a.dx, -a.dy, -a.dxx, -a.dyy};
}
template <class T>
Jet2<T> operator/(const Jet2<T>& a, const std::type_identity_t<T>& s) {
  return {a.v / s, a.dx / s, a.dy / s, a.dxx / s, a.dyy / s};
}

template <class T>
Jet2<T>& operator+=(Jet2<T>& a, const Jet2<T>& b) {
  return a = a + b;
}

template <class T>
Jet2<T> tanh(const Jet2<T>& a) {
  using jet_detail::tanh;
  const T t = tanh(a.v);
  const T d1 = T(1.0) - t * t;
  const T d2 = T(-2.0) * t * d1;
  return jet_detail::chain(a, t, d1, d2);
}

template <class T>
Jet2<T> exp(const Jet2<T>& a) {
  using jet_detail::exp;
  const T e = exp(a.v);
  return jet_detail::chain(a, e, e, e);
}

template <class T>
Jet2<T> sin(const Jet2<T>& a) {
  using jet_detail::cos;
  using jet_detail::sin;
  const T s = sin(a.v);
  return jet_detail::chain(a, s, cos(a.v), -s);
}

template <class T>
Jet2<T> cos(const Jet2<T>& a) {
  using jet_detail::cos;
  using jet_detail::sin;
  const T c = cos(a.v);
  return jet_detail::chain(a, c, -sin(a.v), -c);
}

template <class T>
Jet2<T> pow(const Jet2<T>& a, int n) {
  using std::pow;
  if (n == 0) return Jet2<T>::constant(T(1.0));
  const T p0 = pow(a.v, n);
  const T p1 = T(static_cast<double>(n)) * pow(a.v, n - 1);
  const T p2 = n == 1 ? T{} : T(static_cast<double>(n) * (n - 1)) * pow(a.v, n - 2);
  return jet_detail::chain(a, p0, p1, p2);
}

template <class T>
Jet2<T> silu(const Jet2<T>& a) {
  // silu' = s + x s (1-s), silu'' = s (1-s) (2 + x (1 - 2s)).
  const T s = jet_detail::sigmoid(a.v);
  const T s1 = s * (T(1.0) - s);
  const T d1 = s + a.v * s1;
  const T d2 = s1 * (T(2.0) + a.v * (T(1.0) - T(2.0) * s));
  return jet_detail::chain(a, jet_detail::silu_value(a.v), d1, d2);
}

template <class T>
Jet2<T> log(const Jet2<T>&) {
  throw UnsupportedPrimitive("log");
}
template <class T>
Jet2<T> sqrt(const Jet2<T>&) {
  throw UnsupportedPrimitive("sqrt");
}
template <class T>
Jet2<T> abs(const Jet2<T>&) {
  throw UnsupportedPrimitive("abs");
}

/// Evaluates f at (x, y) on seeded jets: x -> (x,1,0,0,0), y -> (y,0,1,0,0).
/// f receives Jet2<TapeScalar> arguments and may capture recorded parameters.
template <class F>
Jet2<TapeScalar> jet_eval(F&& f, double x, double y) {
  return std::forward<F>(f)(Jet2<TapeScalar>::seed_x(TapeScalar(x)),
                            Jet2<TapeScalar>::seed_y(TapeScalar(y)));
}

}  // namespace unbounded::autodiff
