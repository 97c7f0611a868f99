#pragma once

#include "mgq/geodesics.hpp"

namespace mgq {

// Sign conventions used throughout: the Faraday tensor and a potential are
// related by F_jk = d_k A_j - d_j A_k, and the flux through a triangle with
// boundary P0 -> P1 -> P2 -> P0 is the circulation of A along that boundary.
// For a constant field F_12 = B in the plane this gives -B times the signed
// (counter-clockwise positive) area.

struct FluxOptions {
  int nodes = 16;
  bool refine = false;           // repeat with doubled nodes and report the difference
  bool allow_closed_form = true;  // closed forms for flat-constant and H^2 area-form fields
  GeodesicOptions geodesic;
};

struct FluxResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool closed_form = false;
};

// Triangle with geodesic edges, filled by the geodesic cone from P0 over P1 -> P2.
FluxResult flux_triangle(const ManifoldModel& m, const Vec& p0, const Vec& p1, const Vec& p2,
                         const FluxOptions& opt = {});
double flux(const ManifoldModel& m, const Vec& p0, const Vec& p1, const Vec& p2,
            const FluxOptions& opt = {});

// Phi_q(a): flux through the triangle a -> o -> s_q(a) -> a.
double phi(const ManifoldModel& m, const Vec& q, const Vec& a, const FluxOptions& opt = {});
// Same quantity as the integral of A^o along the geodesic from s_q(a) through q to a.
double phi_line(const ManifoldModel& m, const Vec& q, const Vec& a, int nodes = 24,
                const GeodesicOptions& gopt = {});

// A(q, base): radial-gauge potential at q built along the geodesic from base.
Vec radial_potential(const ManifoldModel& m, const Vec& base, const Vec& q, int nodes = 24,
                     const GeodesicOptions& gopt = {});
inline Vec radial_potential_o(const ManifoldModel& m, const Vec& q, int nodes = 24) {
  return radial_potential(m, m.base_point, q, nodes);
}

// Signed hyperbolic area of the geodesic triangle (counter-clockwise positive).
double h2_triangle_area(const Vec& a, const Vec& b, const Vec& c);

}  // namespace mgq
