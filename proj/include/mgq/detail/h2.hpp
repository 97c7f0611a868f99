#pragma once

// Closed-form hyperboloid geometry in the graph chart, generic in the scalar
// type so Jacobians come from forward-mode differentiation.

#include <cmath>

#include "mgq/detail/autodiff.hpp"

namespace mgq::detail {

template <class T>
struct Amb {
  T x[3];
};

template <class T>
inline Amb<T> h2_lift(const T* q) {
  using std::sqrt;
  return {{q[0], q[1], sqrt(1.0 + q[0] * q[0] + q[1] * q[1])}};
}

template <class T>
inline T minkowski(const Amb<T>& a, const Amb<T>& b) {
  return a.x[0] * b.x[0] + a.x[1] * b.x[1] - a.x[2] * b.x[2];
}

// cosh(r) and sinh(r)/r as functions of r^2, smooth at r = 0.
template <class T>
inline void cosh_sinhc(const T& r2, T& ch, T& shc) {
  using std::cosh;
  using std::sinh;
  using std::sqrt;
  if (value_of(r2) < 1e-6) {
    ch = 1.0 + r2 / 2.0 + r2 * r2 / 24.0 + r2 * r2 * r2 / 720.0;
    shc = 1.0 + r2 / 6.0 + r2 * r2 / 120.0 + r2 * r2 * r2 / 5040.0;
  } else {
    T r = sqrt(r2);
    ch = cosh(r);
    shc = sinh(r) / r;
  }
}

// exp_q(v) in chart components.
template <class T>
inline void h2_exp(const T* q, const T* v, T* out) {
  Amb<T> X = h2_lift(q);
  Amb<T> W{{v[0], v[1], (q[0] * v[0] + q[1] * v[1]) / X.x[2]}};
  T r2 = minkowski(W, W);
  if (value_of(r2) < 0.0) r2 = r2 - value_of(r2);
  T ch, shc;
  cosh_sinhc(r2, ch, shc);
  out[0] = ch * X.x[0] + shc * W.x[0];
  out[1] = ch * X.x[1] + shc * W.x[1];
}

// V_q(a) in chart components.
template <class T>
inline void h2_log(const T* q, const T* a, T* out) {
  using std::log;
  using std::sqrt;
  Amb<T> X = h2_lift(q), Y = h2_lift(a);
  T c = -minkowski(X, Y);
  T d = c - 1.0;
  T f;  // r / sinh r
  if (value_of(d) < 1e-5) {
    f = 1.0 - d / 3.0 + 2.0 * d * d / 15.0 - 4.0 * d * d * d / 105.0;
  } else {
    T s = sqrt(c * c - 1.0);
    f = log(c + s) / s;
  }
  out[0] = (Y.x[0] - c * X.x[0]) * f;
  out[1] = (Y.x[1] - c * X.x[1]) * f;
}

}  // namespace mgq::detail
