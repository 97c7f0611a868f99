#include "mgq/magnetic.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mgq/quadrature.hpp"

namespace mgq {

namespace {

bool coeffs_vanish(const FieldSpec& f) {
  for (double c : f.coeffs)
    if (c != 0.0) return false;
  return true;
}

std::optional<double> closed_form_flux(const ManifoldModel& m, const Vec& p0, const Vec& p1,
                                       const Vec& p2) {
  if (m.field_is_zero()) return 0.0;
  const auto& f = m.spec.field;
  if (m.geodesic_kind == GeodesicKind::flat && f.kind == FieldKind::constant) {
    Mat F = m.faraday_matrix(p0);
    return -0.5 * (p1 - p0).dot(F * (p2 - p0));
  }
  if (m.geodesic_kind == GeodesicKind::flat && f.kind == FieldKind::quadratic) {
    // The edge-midpoint rule is exact for quadratics on a triangle.
    Mat F = (m.faraday_matrix(0.5 * (p0 + p1)) + m.faraday_matrix(0.5 * (p1 + p2)) +
             m.faraday_matrix(0.5 * (p2 + p0))) / 3.0;
    return -0.5 * (p1 - p0).dot(F * (p2 - p0));
  }
  if (m.geodesic_kind == GeodesicKind::hyperboloid && f.kind == FieldKind::area_form &&
      coeffs_vanish(f))
    return -f.B * h2_triangle_area(p0, p1, p2);
  return std::nullopt;
}

double cone_flux(const ManifoldModel& m, const Vec& p0, const Vec& p1, const Vec& p2, int nodes,
                 const GeodesicOptions& gopt) {
  const GaussRule& rule = gauss_legendre01(nodes);
  Vec edge = log_map(m, p1, p2, gopt);
  auto base_samples = geodesic_ray(m, p1, edge, rule.x, gopt);
  double total = 0.0;
  for (int is = 0; is < nodes; ++is) {
    const RaySample& bs = base_samples[is];
    LogResult lg = log_map_full(m, p0, bs.point, gopt);
    Vec dW = lg.dv_da * bs.velocity;
    auto ray = geodesic_ray(m, p0, lg.v, rule.x, gopt);
    double inner = 0.0;
    for (int it = 0; it < nodes; ++it) {
      const RaySample& r = ray[it];
      Vec sigma_s = r.d_dv * dW;
      inner += rule.w[it] * r.velocity.dot(m.faraday_matrix(r.point) * sigma_s);
    }
    total += rule.w[is] * inner;
  }
  return -total;
}

}  // namespace

double h2_triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  auto lift = [](const Vec& q) {
    return Eigen::Vector3d(q[0], q[1], std::sqrt(1.0 + q.squaredNorm()));
  };
  auto mink = [](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
    return x[0] * y[0] + x[1] * y[1] - x[2] * y[2];
  };
  Eigen::Matrix3d M;
  M.col(0) = lift(a);
  M.col(1) = lift(b);
  M.col(2) = lift(c);
  double num = M.determinant();
  double den = 1.0 - mink(M.col(0), M.col(1)) - mink(M.col(1), M.col(2)) - mink(M.col(2), M.col(0));
  return 2.0 * std::atan2(num, den);
}

FluxResult flux_triangle(const ManifoldModel& m, const Vec& p0, const Vec& p1, const Vec& p2,
                         const FluxOptions& opt) {
  for (const Vec* p : {&p0, &p1, &p2}) m.require_in_chart(*p, "flux_triangle");
  FluxResult r;
  if (m.dim < 2) return r;
  if (opt.allow_closed_form) {
    if (auto v = closed_form_flux(m, p0, p1, p2)) {
      r.value = *v;
      r.closed_form = true;
      return r;
    }
  }
  r.value = cone_flux(m, p0, p1, p2, opt.nodes, opt.geodesic);
  if (opt.refine) {
    double fine = cone_flux(m, p0, p1, p2, 2 * opt.nodes, opt.geodesic);
    r.error_estimate = std::abs(fine - r.value);
    r.value = fine;
  }
  if (!std::isfinite(r.value)) throw NumericalError("flux_triangle: non-finite quadrature result");
  return r;
}

double flux(const ManifoldModel& m, const Vec& p0, const Vec& p1, const Vec& p2,
            const FluxOptions& opt) {
  return flux_triangle(m, p0, p1, p2, opt).value;
}

double phi(const ManifoldModel& m, const Vec& q, const Vec& a, const FluxOptions& opt) {
  if (m.field_is_zero() || (a - q).norm() == 0.0) return 0.0;
  Vec b = reflect(m, q, a, opt.geodesic);
  return flux(m, a, m.base_point, b, opt);
}

Vec radial_potential(const ManifoldModel& m, const Vec& base, const Vec& q, int nodes,
                     const GeodesicOptions& gopt) {
  Vec A = Vec::Zero(m.dim);
  if (m.field_is_zero() || (q - base).norm() == 0.0) return A;
  const GaussRule& rule = gauss_legendre01(nodes);
  LogResult lg = log_map_full(m, base, q, gopt);
  auto ray = geodesic_ray(m, base, lg.v, rule.x, gopt);
  for (int k = 0; k < nodes; ++k) {
    const RaySample& r = ray[k];
    Mat dQ = r.d_dv * lg.dv_da;  // dQ(t)/dq
    A += rule.w[k] * (dQ.transpose() * (m.faraday_matrix(r.point) * r.velocity));
  }
  return A;
}

double phi_line(const ManifoldModel& m, const Vec& q, const Vec& a, int nodes,
                const GeodesicOptions& gopt) {
  if (m.field_is_zero() || (a - q).norm() == 0.0) return 0.0;
  const GaussRule& rule = gauss_legendre01(nodes);
  Vec v = log_map(m, q, a, gopt);
  double total = 0.0;
  for (double sign : {1.0, -1.0}) {
    auto ray = geodesic_ray(m, q, sign * v, rule.x, gopt);
    double part = 0.0;
    for (int k = 0; k < nodes; ++k)
      part += rule.w[k] * radial_potential(m, m.base_point, ray[k].point, nodes, gopt).dot(ray[k].velocity);
    total += sign * part;
  }
  return total;
}

}  // namespace mgq
