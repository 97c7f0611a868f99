#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mgq/reflections.hpp"

namespace mgq {

// Phase-space indices run over the ordered chart basis (q^1..q^n, p_1..p_n);
// qi(k) = k and pi(k) = n + k.
struct PhaseConnection {
  int n = 0;
  PhasePoint x;
  P3 gamma;  // gamma(a, b, c) = Gamma^a_bc
  T4 B;      // B(m, j, k, l), fully symmetric in (j, k, l)
  T3 C;      // C(j, k, l) = F_j{kl}

  int qi(int k) const { return k; }
  int pi(int k) const { return n + k; }
  // Named blocks.
  double qqq(int m, int j, int k) const { return gamma(qi(m), qi(j), qi(k)); }  // Gamma^{q^m}_{q^j q^k}
  double pqp(int m, int j, int k) const { return gamma(pi(m), qi(j), pi(k)); }  // Gamma^{p_m}_{q^j p_k}
  double ppq(int m, int k, int j) const { return gamma(pi(m), pi(k), qi(j)); }  // Gamma^{p_m}_{p_k q^j}
  double pqq(int m, int j, int k) const { return gamma(pi(m), qi(j), qi(k)); }  // Gamma^{p_m}_{q^j q^k}
};

// Christoffel symbols from the closed formulas: Gamma^q_qq = G, Gamma^p_qp = Gamma^p_pq = -G,
// Gamma^p_qq = p B + C, everything else zero.
PhaseConnection connection_explicit(const ManifoldModel& m, const PhasePoint& x);

// Gamma(x) = -1/2 D^2 sigma_x(x') at x' = x by central second differences with step h.
// Only gamma is filled; B and C are not separable from a single point.
PhaseConnection connection_from_sigma(const ManifoldModel& m, const PhasePoint& x, double h,
                                      const ReflectionOptions& opt = {});

// Max-norm of the difference of the Christoffel arrays.
double connection_distance(const PhaseConnection& a, const PhaseConnection& b);

struct RouteReport {
  std::vector<double> steps;
  std::vector<double> errors;  // vs connection_explicit
  double order = 0.0;          // least-squares slope of log error vs log h
  // True when every error sits below the noise floor: the stencil is exact for
  // this model (sigma is polynomial in x'), so no order can be measured.
  bool exact = false;
  bool passes(double lo = 1.8, double hi = 2.2) const { return exact || (order >= lo && order <= hi); }
};

// Reflection options that keep sigma a smooth function of x' on ODE models.
ReflectionOptions smooth_reflection_options(const ManifoldModel& m);

RouteReport connection_route_check(const ManifoldModel& m, const PhasePoint& x,
                                   const std::vector<double>& steps = {1e-2, 5e-3, 2.5e-3},
                                   double noise_floor = 1e-9);

struct PhaseCurvature {
  int n = 0;
  PhasePoint x;
  P4 R;     // R(a, b, c, d) = R^a_bcd assembled from base-manifold tensors
  P4 R_fd;  // same from d Gamma - d Gamma + [Gamma, Gamma] with finite-difference d Gamma
  T4 M;     // magnetic curvature M(s, i, j, k)
  P2 ricci;     // ricci(i, j) = R^k_ikj from R
  P2 ricci_fd;  // same from R_fd
  double discrepancy = 0.0;  // max |R - R_fd|

  int qi(int k) const { return k; }
  int pi(int k) const { return n + k; }
  double qqqq(int s, int i, int j, int k) const { return R(qi(s), qi(i), qi(j), qi(k)); }
  double ppqq(int s, int j, int i, int k) const { return R(pi(s), pi(j), qi(i), qi(k)); }
  double pqpq(int s, int i, int j, int k) const { return R(pi(s), qi(i), pi(j), qi(k)); }
  double pqqp(int s, int i, int k, int j) const { return R(pi(s), qi(i), qi(k), pi(j)); }
  double pqqq(int s, int i, int j, int k) const { return R(pi(s), qi(i), qi(j), qi(k)); }
};

// Riemann tensor of a connection field by the standard formula, with 4th-order
// finite differences of step h for the chart derivatives.
P4 curvature_fd(const std::function<PhaseConnection(const PhasePoint&)>& conn, const PhasePoint& x,
                double h);
P2 ricci_from(const P4& R);
// (2/3) block-diag(symmetric base Ricci, 0).
P2 ricci_expected(const ManifoldModel& m, const Vec& q);

// Magnetic curvature from its closed form in F, the base curvature and nabla nabla F.
T4 magnetic_curvature(const ManifoldModel& m, const Vec& q);

PhaseCurvature curvature_phase(const ManifoldModel& m, const PhasePoint& x, double h = 1e-3);

// ---- symplectic structure

struct PoissonTensor {
  PMat psi;    // [[0, -I], [I, F]]
  PMat omega;  // [[F, I], [-I, 0]]
};
PoissonTensor poisson_tensor(const ManifoldModel& m, const Vec& q);
// max over (a, b, c) of |Psi^al d_l Psi^bc + cyclic| with finite-difference d Psi.
double jacobi_identity_residual(const ManifoldModel& m, const PhasePoint& x, double h = 1e-4);

// ---- covariant derivatives on T*M

using PhaseScalar = std::function<double(const PhasePoint&)>;
using PhaseMatrixField = std::function<PMat(const PhasePoint&)>;

enum class Valence { covariant, contravariant };

// out(a, b, c) = nabla_c T_ab (covariant) or nabla_c T^ab (contravariant), chart
// derivatives by 4th-order differences of step h.
P3 covariant_derivative(const PhaseConnection& conn, const PhaseMatrixField& T, Valence v, double h);
// Same with the chart derivative supplied: dT(a, b, c) = d_c T_ab.
P3 covariant_derivative(const PhaseConnection& conn, const PMat& T, const P3& dT, Valence v);

PVec scalar_gradient(const PhaseScalar& f, const PhasePoint& x, double h);
// nabla^2 f_ab = d_a d_b f - Gamma^c_ab d_c f.
PMat covariant_hessian(const PhaseConnection& conn, const PVec& df, const PMat& d2f);
PMat covariant_hessian(const PhaseConnection& conn, const PhaseScalar& f, double h);

// Exact chart derivative of the magnetic symplectic matrix: out(a, b, c) = d_c Omega_ab.
P3 omega_derivative(const ManifoldModel& m, const Vec& q);
// max |nabla omega| at x.
double nabla_omega_residual(const ManifoldModel& m, const PhasePoint& x);

// ---- coupling and Maxwell-type identities on the base

struct MaxwellReport {
  double duality = 0.0;         // (a): both duality formulas
  double cyclic = 0.0;          // (b): cyclic sums of F_j{kl} and F_[jk]l
  double coupling_curvature = 0.0;  // (c): nabla_j F_s{ik} - nabla_k F_s{ij} vs M
  bool has_metric = false;
  double continuity = 0.0;      // (d): g^ls nabla_l j_s
  double kappa_exact = 0.0;     // (d): kappa - dj
  double kappa_closed = 0.0;    // (d): cyclic sum of d kappa
  double max() const;
};

// j_s = (2/3) F_s{ik} g^ik.
Vec current_covector(const ManifoldModel& m, const Vec& q);
// kappa_sm = g^ik (3 Mc_iksm + 2 F_il R^l_ksm), Mc the all-plus cyclic variant of M.
Mat kappa_form(const ManifoldModel& m, const Vec& q);

MaxwellReport maxwell_identities(const ManifoldModel& m, const Vec& q, double h = 1e-3);

// ---- JSON dumps (nested arrays with basis labels)

std::string to_json(const PhaseConnection& c);
std::string to_json(const PhaseCurvature& c);

}  // namespace mgq
