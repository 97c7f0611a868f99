#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mgq/geodesics.hpp"
#include "test_util.hpp"

using namespace mgq;
using namespace mgq::testing;

namespace {

// Ambient Minkowski oracle for the hyperboloid, independent of the library.
Eigen::Vector3d lift(const Vec& q) { return {q[0], q[1], std::sqrt(1 + q.squaredNorm())}; }
double mink(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return a[0] * b[0] + a[1] * b[1] - a[2] * b[2];
}
Vec chart(const Eigen::Vector3d& X) { return vec2(X[0], X[1]); }
Vec oracle_exp(const Vec& q, const Vec& v) {
  Eigen::Vector3d X = lift(q);
  Eigen::Vector3d W(v[0], v[1], q.dot(v) / X[2]);
  double r = std::sqrt(mink(W, W));
  if (r == 0) return q;
  return chart(std::cosh(r) * X + std::sinh(r) * W / r);
}
double oracle_dist(const Vec& a, const Vec& b) { return std::acosh(-mink(lift(a), lift(b))); }
Vec oracle_midpoint(const Vec& a, const Vec& b) {
  Eigen::Vector3d s = lift(a) + lift(b);
  return chart(s / std::sqrt(-mink(s, s)));
}

std::vector<ManifoldModel> curved_models() {
  return {h2(), h2().with_numeric_geodesics(), deformed(), deformed({}, 0.6, 0.7)};
}

}  // namespace

TEST(Geodesics, EuclideanClosedForms) {
  auto m = euclid(2);
  Vec q = vec2(0.3, -1.2), v = vec2(2.0, 0.5), a = vec2(-0.7, 0.9), b = vec2(1.5, 2.0);
  EXPECT_EQ(exp_point(m, q, v), q + v);
  EXPECT_EQ(log_map(m, q, a), a - q);
  EXPECT_LT((reflect(m, q, a) - (2 * q - a)).norm(), 1e-15);
  auto mp = midpoint(m, a, b);
  EXPECT_EQ(mp.c, 0.5 * (a + b));
  EXPECT_EQ(mp.u, a - b);
  auto d = densities(m, q, a);
  EXPECT_DOUBLE_EQ(d.j, 1.0);
  EXPECT_DOUBLE_EQ(d.e_at_a, 1.0);
  EXPECT_DOUBLE_EQ(d.J, 1.0);
}

TEST(Geodesics, EuclideanOdeEngineIsExactStraightLine) {
  auto m = euclid(2).with_numeric_geodesics();
  Vec q = vec2(0.3, -1.2), v = vec2(2.0, 0.5);
  EXPECT_LT((exp_point(m, q, v) - (q + v)).norm(), 1e-12);
  EXPECT_LT((exp_point(m, q, Vec::Zero(2)) - q).norm(), 1e-15);
}

TEST(Geodesics, HyperboloidExpFromOrigin) {
  for (auto m : {h2(), h2().with_numeric_geodesics()}) {
    Vec v = vec2(std::cos(0.4), std::sin(0.4));
    Vec expected = std::sinh(1.0) * v;  // chart image of cosh(1) e3 + sinh(1) v
    EXPECT_LT((exp_point(m, Vec::Zero(2), v) - expected).norm(), 1e-9);
  }
}

TEST(Geodesics, HyperboloidExpMatchesAmbientOracle) {
  std::mt19937_64 rng(21);
  auto mc = h2(), mn = h2().with_numeric_geodesics();
  for (int k = 0; k < 50; ++k) {
    Vec q = random_point(rng, 2, 1.5), v = random_point(rng, 2, 1.5);
    Vec o = oracle_exp(q, v);
    EXPECT_LT((exp_point(mc, q, v) - o).norm(), 1e-12);
    EXPECT_LT((exp_point(mn, q, v) - o).norm(), 1e-8);
  }
}

TEST(Geodesics, HyperboloidLogLengthIsDistance) {
  for (auto m : {h2(), h2().with_numeric_geodesics()}) {
    for (double t : {0.1, 0.7, 1.9}) {
      Vec a = vec2(std::sinh(t), 0.0);
      Vec v = log_map(m, Vec::Zero(2), a);
      EXPECT_NEAR(tangent_norm(m, Vec::Zero(2), v), t, 1e-9);
    }
    std::mt19937_64 rng(22);
    for (int k = 0; k < 20; ++k) {
      Vec q = random_point(rng, 2, 1.5), a = random_point(rng, 2, 1.5);
      EXPECT_NEAR(tangent_norm(m, q, log_map(m, q, a)), oracle_dist(q, a), 1e-8);
    }
  }
}

TEST(Geodesics, RoundTripsOnRandomPairs) {
  std::mt19937_64 rng(23);
  for (const auto& m : curved_models()) {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      Vec q = random_point(rng, 2, 1.5), a = random_point(rng, 2, 1.5);
      Vec v = log_map(m, q, a);
      worst = std::max(worst, (exp_point(m, q, v) - a).norm());
      Vec w = random_point(rng, 2, 1.0);
      worst = std::max(worst, (log_map(m, q, exp_point(m, q, w)) - w).norm());
    }
    EXPECT_LT(worst, 1e-8) << m.name;
  }
}

TEST(Geodesics, ReflectionInvolutionAndFixedPoint) {
  std::mt19937_64 rng(24);
  for (const auto& m : curved_models()) {
    for (int k = 0; k < 30; ++k) {
      Vec q = random_point(rng, 2, 1.0), a = random_point(rng, 2, 1.0);
      EXPECT_LT((reflect(m, q, reflect(m, q, a)) - a).norm(), 1e-8) << m.name;
      EXPECT_LT((reflect(m, q, q) - q).norm(), 1e-12) << m.name;
    }
  }
}

TEST(Geodesics, HyperboloidMidpointAxisExample) {
  auto m = h2();
  const double t = 1.3;
  auto mp = midpoint(m, Vec::Zero(2), vec2(std::sinh(t), 0.0));
  EXPECT_NEAR(mp.c[0], std::sinh(t / 2), 1e-12);
  EXPECT_NEAR(mp.c[1], 0.0, 1e-12);
}

TEST(Geodesics, MidpointMatchesAmbientOracleAndResidual) {
  std::mt19937_64 rng(25);
  for (const auto& m : curved_models()) {
    for (int k = 0; k < 30; ++k) {
      Vec a = random_point(rng, 2, 1.5), b = random_point(rng, 2, 1.5);
      auto mp = midpoint(m, a, b);
      EXPECT_LT((reflect(m, mp.c, a) - b).norm(), 1e-9) << m.name;
      EXPECT_LT((mp.u - 2 * log_map(m, mp.c, a)).norm(), 1e-12);
      if (m.name == "hyperboloid_h2") EXPECT_LT((mp.c - oracle_midpoint(a, b)).norm(), 1e-9);
    }
    Vec a = vec2(0.2, 0.3);
    auto same = midpoint(m, a, a);
    EXPECT_LT((same.c - a).norm(), 1e-12);
    EXPECT_LT(same.u.norm(), 1e-12);
  }
}

TEST(Geodesics, DensityReflectionSymmetry) {
  std::mt19937_64 rng(26);
  for (const auto& m : curved_models()) {
    for (int k = 0; k < 20; ++k) {
      Vec q = random_point(rng, 2, 1.0), a = random_point(rng, 2, 1.0);
      double j1 = j_density(m, q, a), j2 = j_density(m, q, reflect(m, q, a));
      EXPECT_NEAR(j1, j2, 1e-8) << m.name;
      auto d = densities(m, q, a);
      EXPECT_GT(d.j, 0.0);
      EXPECT_GT(d.e_at_a, 0.0);
      EXPECT_DOUBLE_EQ(d.J, d.j * d.measure_ratio);
    }
  }
}

TEST(Geodesics, HyperboloidExpJacobianDensity) {
  std::mt19937_64 rng(27);
  for (auto m : {h2(), h2().with_numeric_geodesics()}) {
    for (int k = 0; k < 20; ++k) {
      Vec q = random_point(rng, 2, 1.2), a = random_point(rng, 2, 1.2);
      double r = oracle_dist(q, a);
      EXPECT_NEAR(e_density(m, q, a), std::sinh(r) / r, 1e-8);
    }
  }
}

TEST(Geodesics, MidpointJacobianSmallDistanceExpansion) {
  // j_q(exp_q v) = 1 - (1/3) Ric(v, v) + O(|v|^4); Ric = -g on the hyperboloid.
  auto m = h2();
  Vec q = vec2(0.4, -0.3);
  for (double eps : {0.02, 0.01}) {
    Vec v = eps * vec2(0.6, 0.8);
    double vv = v.dot(m.metric(q) * v);
    double j = j_density(m, q, exp_point(m, q, v));
    EXPECT_NEAR(j, 1.0 + vv / 3.0, 5 * eps * eps * eps * eps);
  }
}

TEST(Geodesics, DensitiesAgreeWithFiniteDifferenceJacobians) {
  std::mt19937_64 rng(28);
  for (const auto& m : curved_models()) {
    Vec q = random_point(rng, 2, 1.0), a = random_point(rng, 2, 1.0);
    auto d = densities(m, q, a);
    const double h = 1e-5;
    Mat ds(2, 2), dvq_a(2, 2), dvq_b(2, 2), dexp(2, 2);
    Vec b = reflect(m, q, a);
    Vec v = log_map(m, q, a);
    for (int k = 0; k < 2; ++k) {
      Vec e = Vec::Zero(2);
      e[k] = h;
      ds.col(k) = (reflect(m, q, a + e) - reflect(m, q, a - e)) / (2 * h);
      dvq_a.col(k) = (log_map(m, q + e, a) - log_map(m, q - e, a)) / (2 * h);
      dvq_b.col(k) = (log_map(m, q + e, b) - log_map(m, q - e, b)) / (2 * h);
      dexp.col(k) = (exp_point(m, q, v + e) - exp_point(m, q, v - e)) / (2 * h);
    }
    double j = std::abs((dvq_a + dvq_b).determinant()) / 4.0;
    double ratio = m.density(b) * std::abs(ds.determinant()) / m.density(a);
    double e = m.density(a) * std::abs(dexp.determinant()) / m.density(q);
    EXPECT_NEAR(d.j, j, 1e-6) << m.name;
    EXPECT_NEAR(d.measure_ratio, ratio, 1e-6) << m.name;
    EXPECT_NEAR(d.J, j * ratio, 1e-6) << m.name;
    EXPECT_NEAR(d.e_at_a, e, 1e-6) << m.name;
  }
}

TEST(Geodesics, FixedStepAndAdaptiveAgree) {
  auto m = deformed({}, 0.6, 0.7);
  GeodesicOptions fixed;
  fixed.fixed_steps = 40;
  Vec q = vec2(0.5, -0.2), v = vec2(-1.0, 0.8);
  EXPECT_LT((exp_point(m, q, v) - exp_point(m, q, v, fixed)).norm(), 1e-9);
}

TEST(Geodesics, PathRecordedAndSatisfiesGeodesicEquation) {
  auto m = deformed({}, 0.6, 0.7);
  GeodesicOptions opt;
  opt.keep_path = true;
  auto sol = exp_map(m, vec2(0.5, -0.2), vec2(-1.0, 0.8), opt);
  ASSERT_GT(sol.path.size(), 3u);
  EXPECT_LT((sol.path.front().q - vec2(0.5, -0.2)).norm(), 1e-15);
  EXPECT_LT((sol.path.back().q - sol.end).norm(), 1e-15);
}

TEST(Geodesics, ChartExitIsAnError) {
  auto m = h2().with_numeric_geodesics();
  EXPECT_THROW(exp_point(m, Vec::Zero(2), vec2(4.0, 0.0)), NumericalError);
  EXPECT_THROW(exp_point(h2(), Vec::Zero(2), vec2(4.0, 0.0)), NumericalError);
  EXPECT_THROW(log_map(h2(), vec2(20.0, 0.0), Vec::Zero(2)), NumericalError);
}
