#pragma once

// Forward-mode derivatives through Eigen's AutoDiffScalar. Nesting gives exact
// second derivatives of the closed-form model fields.

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace mgq::detail {

template <int N>
using AD1 = Eigen::AutoDiffScalar<Eigen::Matrix<double, N, 1>>;
template <int N>
using AD2 = Eigen::AutoDiffScalar<Eigen::Matrix<AD1<N>, N, 1>>;

template <int N>
inline AD1<N> seed1(double v, int i) {
  return AD1<N>(v, N, i);
}

template <int N>
inline AD2<N> seed2(double v, int i) {
  AD2<N> x;
  x.value() = AD1<N>(v, N, i);
  for (int k = 0; k < N; ++k) {
    x.derivatives()(k) = AD1<N>(k == i ? 1.0 : 0.0);
    x.derivatives()(k).derivatives().setZero();
  }
  return x;
}

template <class T>
struct ScalarValue {
  static double get(const T& x) { return static_cast<double>(x); }
};
template <class D>
struct ScalarValue<Eigen::AutoDiffScalar<D>> {
  static double get(const Eigen::AutoDiffScalar<D>& x) {
    using Inner = std::decay_t<decltype(x.value())>;
    return ScalarValue<Inner>::get(x.value());
  }
};

template <class T>
inline double value_of(const T& x) {
  return ScalarValue<T>::get(x);
}

}  // namespace mgq::detail
