#pragma once

#include <vector>

#include "mgq/geometry.hpp"

namespace mgq {

struct GeodesicOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  // > 0 switches the ODE engine to a fixed-step 7(8) Runge-Kutta scheme. The
  // result is then a smooth function of (q, v), which finite-difference
  // consumers (connection from sigma) need.
  int fixed_steps = 0;
  bool keep_path = false;
  int max_newton = 60;
  double newton_tol = 1e-12;
};

struct PathNode {
  double t;
  Vec q;
  Vec qdot;
};

struct GeodesicSolution {
  Vec start;
  Vec velocity;
  Vec end;
  Vec end_velocity;
  Mat jacobi;    // d exp_q(v) / dv
  Mat jacobi_q;  // d exp_q(v) / dq at fixed chart components of v
  bool has_jacobi = false;
  std::vector<PathNode> path;
};

struct LogResult {
  Vec v;      // V_q(a)
  Mat dv_da;  // d V_q(a) / d a
  Mat dv_dq;  // d V_q(a) / d q
  int newton_iterations = 0;
  double residual = 0.0;
};

struct ReflectResult {
  Vec point;  // s_q(a)
  Mat d_da;   // d s_q(a) / d a
  Mat d_dq;   // d s_q(a) / d q
};

struct Midpoint {
  Vec c;  // a v b
  Vec u;  // a ^ b = 2 V_c(a)
  double residual = 0.0;
};

struct DensityPack {
  double j = 1.0;
  double e_at_a = 1.0;
  double e_at_b = 1.0;
  double measure_ratio = 1.0;
  double J = 1.0;
};

GeodesicSolution exp_map(const ManifoldModel& m, const Vec& q, const Vec& v,
                         const GeodesicOptions& opt = {}, bool with_jacobi = true);
Vec exp_point(const ManifoldModel& m, const Vec& q, const Vec& v, const GeodesicOptions& opt = {});

// Samples of t -> exp_q(t v) at increasing times in [0, 1], with the variations
// of the sampled point in the initial data.
struct RaySample {
  double t;
  Vec point;
  Vec velocity;
  Mat d_dv;  // d exp_q(t v) / dv
  Mat d_dq;  // d exp_q(t v) / dq
};
std::vector<RaySample> geodesic_ray(const ManifoldModel& m, const Vec& q, const Vec& v,
                                    const std::vector<double>& times, const GeodesicOptions& opt = {});

LogResult log_map_full(const ManifoldModel& m, const Vec& q, const Vec& a,
                       const GeodesicOptions& opt = {});
Vec log_map(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt = {});

ReflectResult reflect_full(const ManifoldModel& m, const Vec& q, const Vec& a,
                           const GeodesicOptions& opt = {});
Vec reflect(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt = {});

Midpoint midpoint(const ManifoldModel& m, const Vec& a, const Vec& b, const GeodesicOptions& opt = {});

// j_q(a) = 2^-n |det(dV_q(a)/dq + dV_q(b)/dq)| at b = s_q(a) held fixed.
DensityPack densities(const ManifoldModel& m, const Vec& q, const Vec& a,
                      const GeodesicOptions& opt = {});
double j_density(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt = {});
double e_density(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt = {});

// Length |v|_g of a tangent vector (metric models).
double tangent_norm(const ManifoldModel& m, const Vec& q, const Vec& v);

}  // namespace mgq
