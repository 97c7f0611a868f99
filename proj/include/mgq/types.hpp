#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <array>
#include <cassert>
#include <complex>
#include <stdexcept>
#include <string>

namespace mgq {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxPhaseDim = 2 * kMaxDim;

// Small vectors and matrices never allocate: the dimension is dynamic but bounded.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using PVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxPhaseDim, 1>;
using PMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxPhaseDim, kMaxPhaseDim>;
using cplx = std::complex<double>;

// Raised for domain errors a caller can report (bad config, invalid model combination).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numerical routine fails (chart exit, Newton divergence, singular frame).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int ipow(int b, int e) { return e == 0 ? 1 : b * ipow(b, e - 1); }

// Dense tensor with fixed stride per index and an active dimension n <= Stride.
// Storage is inline; Rank 4 at Stride 6 is ~10 KB, which is fine off the hot paths.
template <int Rank, int Stride>
class Tensor {
 public:
  static constexpr int kSize = ipow(Stride, Rank);

  Tensor() { data_.fill(0.0); }
  explicit Tensor(int n) : n_(n) {
    assert(n <= Stride);
    data_.fill(0.0);
  }

  int dim() const { return n_; }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }

  void set_zero() { data_.fill(0.0); }

  // Max-norm over the active index range.
  double max_abs() const {
    double m = 0.0;
    for_each_index([&](const std::array<int, Rank>& ix) {
      double v = std::abs(data_[flat(ix)]);
      if (v > m) m = v;
    });
    return m;
  }

  template <class Fn>
  void for_each_index(Fn&& fn) const {
    std::array<int, Rank> ix{};
    if (n_ == 0) return;
    while (true) {
      fn(ix);
      int k = Rank - 1;
      while (k >= 0 && ++ix[k] == n_) {
        ix[k] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }

  double& at(const std::array<int, Rank>& ix) { return data_[flat(ix)]; }
  double at(const std::array<int, Rank>& ix) const { return data_[flat(ix)]; }

  Tensor& operator+=(const Tensor& o) {
    for (int i = 0; i < kSize; ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    for (int i = 0; i < kSize; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

 private:
  template <class... I>
  static int offset(I... idx) {
    int off = 0;
    ((off = off * Stride + static_cast<int>(idx)), ...);
    return off;
  }
  static int flat(const std::array<int, Rank>& ix) {
    int off = 0;
    for (int k = 0; k < Rank; ++k) off = off * Stride + ix[k];
    return off;
  }

  int n_ = 0;
  std::array<double, kSize> data_;
};

// Base-manifold tensors (chart components).
using T2 = Tensor<2, kMaxDim>;
using T3 = Tensor<3, kMaxDim>;
using T4 = Tensor<4, kMaxDim>;
using T5 = Tensor<5, kMaxDim>;
// Phase-space tensors in the ordered basis (q^1..q^n, p_1..p_n).
using P2 = Tensor<2, kMaxPhaseDim>;
using P3 = Tensor<3, kMaxPhaseDim>;
using P4 = Tensor<4, kMaxPhaseDim>;

struct PhasePoint {
  Vec q;
  Vec p;

  PVec stacked() const {
    PVec x(q.size() + p.size());
    x << q, p;
    return x;
  }
  static PhasePoint from_stacked(const PVec& x) {
    const int n = static_cast<int>(x.size()) / 2;
    return {x.head(n), x.tail(n)};
  }
};

}  // namespace mgq
