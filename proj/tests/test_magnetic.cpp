#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mgq/magnetic.hpp"
#include "mgq/quadrature.hpp"
#include "test_util.hpp"

using namespace mgq;
using namespace mgq::testing;

namespace {

FluxOptions quadrature_only() {
  FluxOptions o;
  o.allow_closed_form = false;
  return o;
}

// Interior angle at p between geodesics towards a and b, measured with the metric.
double angle_at(const ManifoldModel& m, const Vec& p, const Vec& a, const Vec& b) {
  Vec u = log_map(m, p, a), w = log_map(m, p, b);
  Mat g = m.metric(p);
  return std::acos(u.dot(g * w) / std::sqrt(u.dot(g * u) * w.dot(g * w)));
}

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  for (int n : {1, 2, 5, 16, 33}) {
    const auto& r = gauss_legendre01(n);
    ASSERT_EQ(static_cast<int>(r.x.size()), n);
    for (int deg = 0; deg < 2 * n; ++deg) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += r.w[k] * std::pow(r.x[k], deg);
      EXPECT_NEAR(s, 1.0 / (deg + 1), 1e-14) << n << " " << deg;
    }
  }
}

TEST(Magnetic, FlatConstantFieldFluxIsMinusBTimesSignedArea) {
  auto m = euclid(2, constant_field(1.5));
  for (auto opt : {FluxOptions{}, quadrature_only()}) {
    EXPECT_NEAR(flux(m, vec2(0, 0), vec2(1, 0), vec2(0, 1), opt), -0.75, 1e-13);
    EXPECT_NEAR(flux(m, vec2(0, 0), vec2(0, 1), vec2(1, 0), opt), 0.75, 1e-13);
    EXPECT_NEAR(flux(m, vec2(0, 0), vec2(1, 1), vec2(2, 2), opt), 0.0, 1e-13);
  }
}

TEST(Magnetic, FlatThreeDimensionalConstantField) {
  FieldSpec f = constant_field(0.7);
  auto m = euclid(3, f);
  Vec a = Vec::Zero(3), b = Vec::Zero(3), c = Vec::Zero(3);
  b << 1, 0, 0.5;
  c << 0, 2, -1;
  EXPECT_NEAR(flux(m, a, b, c), flux(m, a, b, c, quadrature_only()), 1e-12);
}

TEST(Magnetic, HyperbolicAreaFormulaMatchesGaussBonnet) {
  auto m = h2();
  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    Vec a = random_point(rng, 2, 1.5), b = random_point(rng, 2, 1.5), c = random_point(rng, 2, 1.5);
    double defect = std::numbers::pi - angle_at(m, a, b, c) - angle_at(m, b, c, a) - angle_at(m, c, a, b);
    double area = h2_triangle_area(a, b, c);
    EXPECT_NEAR(std::abs(area), defect, 1e-10);
    // Chart orientation decides the sign.
    double chart_cross = (b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0];
    if (std::abs(chart_cross) > 1e-3) EXPECT_EQ(area > 0, chart_cross > 0);
  }
}

TEST(Magnetic, HyperbolicAreaFormFluxQuadratureMatchesClosedForm) {
  auto m = h2(area_field(1.0));
  std::mt19937_64 rng(32);
  FluxOptions refine = quadrature_only();
  refine.refine = true;
  for (int k = 0; k < 10; ++k) {
    Vec a = random_point(rng, 2, 1.5), b = random_point(rng, 2, 1.5), c = random_point(rng, 2, 1.5);
    auto q = flux_triangle(m, a, b, c, refine);
    auto cf = flux_triangle(m, a, b, c);
    EXPECT_TRUE(cf.closed_form);
    EXPECT_NEAR(q.value, cf.value, 1e-10);
    EXPECT_LT(q.error_estimate, 1e-9);
    EXPECT_NEAR(cf.value, -h2_triangle_area(a, b, c), 1e-15);
  }
}

TEST(Magnetic, FlatQuadraticFieldClosedFormMatchesQuadrature) {
  auto m = euclid(2, quadratic_field({0.6, 0.2, -0.3, 0.1, 0.0, 0.2}));
  std::mt19937_64 rng(33);
  for (int k = 0; k < 10; ++k) {
    Vec a = random_point(rng, 2, 1.5), b = random_point(rng, 2, 1.5), c = random_point(rng, 2, 1.5);
    auto q = flux_triangle(m, a, b, c, quadrature_only());
    auto cf = flux_triangle(m, a, b, c);
    EXPECT_TRUE(cf.closed_form);
    EXPECT_NEAR(q.value, cf.value, 1e-12);
  }
}

TEST(Magnetic, DegenerateTrianglesHaveNoFlux) {
  for (const auto& m : {h2(area_field(1.0)), deformed(area_field(0.8, {0.1, 0.2, 0.0}))}) {
    Vec a = vec2(0.2, 0.1), b = vec2(-0.4, 0.6);
    EXPECT_NEAR(flux(m, a, a, b, quadrature_only()), 0.0, 1e-13);
    EXPECT_NEAR(flux(m, a, b, b, quadrature_only()), 0.0, 1e-13);
    EXPECT_NEAR(flux(m, a, a, a, quadrature_only()), 0.0, 1e-15);
    // Collinear: the third vertex on the geodesic a -> b.
    Vec c = exp_point(m, a, 0.4 * log_map(m, a, b));
    EXPECT_NEAR(flux(m, a, c, b, quadrature_only()), 0.0, 1e-10);
  }
}

TEST(Magnetic, ApexIndependenceAndAdditivity) {
  std::vector<ManifoldModel> models = {h2(area_field(0.8, {0.2, -0.1, 0.3, 0.05, 0.0, 0.1})),
                                       deformed(area_field(1.0, {0.1, 0.0, 0.2})),
                                       deformed(quadratic_field({0.3, -0.2, 0.4, 0.7, -0.5, 0.25}), 0.5, 0.8),
                                       euclid(2, quadratic_field({0.3, 0.1, -0.2, 0.4, 0.2, -0.1}))};
  std::mt19937_64 rng(33);
  for (const auto& m : models) {
    for (int k = 0; k < 3; ++k) {
      Vec a = random_point(rng, 2, 1.2), b = random_point(rng, 2, 1.2), c = random_point(rng, 2, 1.2);
      auto opt = quadrature_only();
      double f0 = flux(m, a, b, c, opt), f1 = flux(m, b, c, a, opt), f2 = flux(m, c, a, b, opt);
      EXPECT_NEAR(f0, f1, 1e-7) << m.name;
      EXPECT_NEAR(f0, f2, 1e-7) << m.name;
      EXPECT_NEAR(f0, -flux(m, a, c, b, opt), 1e-7) << m.name;
      // Split along the cevian from a to a point of the opposite edge.
      Vec d = exp_point(m, b, 0.35 * log_map(m, b, c));
      EXPECT_NEAR(f0, flux(m, a, b, d, opt) + flux(m, a, d, c, opt), 1e-7) << m.name;
    }
  }
}

TEST(Magnetic, RadialPotentialFlatIsHalfFq) {
  auto m = euclid(2, constant_field(1.3));
  Vec q = vec2(0.8, -1.7);
  Vec expected = 0.5 * m.faraday_matrix(q) * q;
  EXPECT_LT((radial_potential(m, Vec::Zero(2), q) - expected).norm(), 1e-14);
  EXPECT_EQ(radial_potential(m, q, q).norm(), 0.0);
  // Any base point: A(q, a) = (1/2) F (q - a).
  Vec a = vec2(-0.3, 0.4);
  EXPECT_LT((radial_potential(m, a, q) - 0.5 * m.faraday_matrix(q) * (q - a)).norm(), 1e-14);
}

TEST(Magnetic, RadialPotentialGaugeAndCurl) {
  std::vector<ManifoldModel> models = {h2(area_field(1.0)),
                                       h2(area_field(0.5, {0.1, 0.2, -0.3, 0.05, 0.1, -0.02})),
                                       deformed(area_field(0.8)),
                                       deformed(quadratic_field({0.2, 0.1, -0.3, 0.5, 0.2, -0.4}), 0.5, 0.8)};
  std::mt19937_64 rng(34);
  for (const auto& m : models) {
    Vec base = random_point(rng, 2, 0.5);
    for (int k = 0; k < 50; ++k) {
      Vec q = random_point(rng, 2, 1.5);
      Vec A = radial_potential(m, base, q);
      EXPECT_LT(std::abs(A.dot(log_map(m, q, base))), 1e-8) << m.name;
      if (k < 5) {
        const double h = 1e-4;
        Mat dA(2, 2);  // dA(j, k) = d_k A_j
        for (int c = 0; c < 2; ++c) {
          Vec e = Vec::Zero(2);
          e[c] = h;
          dA.col(c) = (radial_potential(m, base, q + e) - radial_potential(m, base, q - e)) / (2 * h);
        }
        double curl = dA(0, 1) - dA(1, 0);
        EXPECT_NEAR(curl, m.faraday(q)(0, 1), 1e-6) << m.name;
      }
    }
  }
}

TEST(Magnetic, PhiExamples) {
  auto m = euclid(2, constant_field(2.0));
  EXPECT_NEAR(phi(m, vec2(1, 0), vec2(1, 1)), -2.0, 1e-13);
  EXPECT_EQ(phi(m, vec2(1, 0), vec2(1, 0)), 0.0);
  EXPECT_EQ(phi(euclid(2), vec2(1, 0), vec2(1, 1)), 0.0);
  EXPECT_NEAR(phi_line(m, vec2(1, 0), vec2(1, 1)), -2.0, 1e-12);
}

TEST(Magnetic, PhiSurfaceMatchesLineIntegral) {
  std::vector<ManifoldModel> models = {h2(area_field(1.0)), deformed(area_field(0.8, {0.1, 0.0, 0.2})),
                                       euclid(2, quadratic_field({0.3, 0.1, -0.2, 0.4, 0.2, -0.1}))};
  std::mt19937_64 rng(35);
  for (const auto& m : models) {
    auto mm = m.with_base_point(vec2(0.3, -0.2));
    for (int k = 0; k < 10; ++k) {
      Vec q = random_point(rng, 2, 1.0), a = random_point(rng, 2, 1.0);
      EXPECT_NEAR(phi(mm, q, a), phi_line(mm, q, a), 1e-7) << m.name;
    }
  }
}
