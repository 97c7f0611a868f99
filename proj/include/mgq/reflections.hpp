#pragma once

#include <string>

#include "mgq/quantizer.hpp"

namespace mgq {

// Matrix of the magnetic symplectic form at q in the basis (q, p): [[F, I], [-I, 0]].
PMat omega_matrix(const ManifoldModel& m, const Vec& q);

struct SymplecticMapSample {
  PhasePoint input;
  PhasePoint output;
  PMat jacobian;  // filled on request
  bool has_jacobian = false;
};

// Pointwise data shared by t_x, e_x and sigma_x at (q, q').
struct ReflectionData {
  Vec s;        // s_q(q')
  Mat ds;       // d s_q / d q'
  Mat dV;       // d V_q / d q'
  Vec alpha;    // A(q', q) - ds^T A(s q', q)
  Vec beta;     // A^o(q') - ds^T A^o(s q')
  Vec dPhi() const { return beta - alpha; }
};

struct ReflectionOptions {
  int potential_nodes = 24;
  GeodesicOptions geodesic;
  bool jacobian = false;
  double jacobian_step = 1e-5;
};

ReflectionData reflection_data(const ManifoldModel& m, const Vec& q, const Vec& qp,
                               const ReflectionOptions& opt = {});

SymplecticMapSample t_map(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                          const ReflectionOptions& opt = {});
SymplecticMapSample e_map(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                          const ReflectionOptions& opt = {});
SymplecticMapSample sigma_map(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                              const ReflectionOptions& opt = {});
PhasePoint sigma(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                 const ReflectionOptions& opt = {});
// The unique x with sigma_x(x') = x''.
PhasePoint sigma_midpoint(const ManifoldModel& m, const PhasePoint& xp, const PhasePoint& xpp,
                          const ReflectionOptions& opt = {});

// Central-difference Jacobian of a phase-space map.
PMat phase_jacobian(const std::function<PhasePoint(const PhasePoint&)>& f, const PhasePoint& x,
                    double h);
// max |J^T Omega(out) J - Omega(in)|.
double symplectic_defect(const ManifoldModel& m, const SymplecticMapSample& s);

// Vector field with W^j d_j W^k + Gamma^k_js W^j W^s = 0.
struct AutoparallelField {
  std::string name;
  VectorField W;
  std::function<Mat(const Vec&)> dW;  // dW(k, j) = d_j W^k; finite differences when empty
  // Closed-form flow when available.
  std::function<Vec(const Vec&, double)> flow;
  double residual_tol = 1e-8;

  Mat jacobian(const Vec& q) const;
};

AutoparallelField constant_autoparallel(const Vec& c);
// Unit field along the geodesics normal to the q2-axis of the hyperboloid chart.
AutoparallelField h2_normal_pencil();
// Velocity field of the geodesic pencil t -> exp_{h(s)}(t n), h(s) = h0 + s d, on a 2D model.
AutoparallelField geodesic_pencil(const ManifoldModel& m, const Vec& h0, const Vec& d,
                                  const Vec& n, const GeodesicOptions& gopt = {});

double autoparallel_residual(const ManifoldModel& m, const AutoparallelField& W, const Vec& q);
Vec autoparallel_flow(const ManifoldModel& m, const AutoparallelField& W, double t, const Vec& q,
                      const GeodesicOptions& gopt = {});
// d R^t / dq.
Mat autoparallel_flow_jacobian(const ManifoldModel& m, const AutoparallelField& W, double t,
                               const Vec& q, const GeodesicOptions& gopt = {});

// Covector of the lifted flow: b = A(q, R q) - dR^T A(R q, q).
Vec lifted_flow_covector(const ManifoldModel& m, const AutoparallelField& W, double t,
                         const Vec& q, const ReflectionOptions& opt = {});
// gamma^t(q, p) = (R^t q, dR^{-T}(p + b)).
SymplecticMapSample lifted_flow(const ManifoldModel& m, const AutoparallelField& W, double t,
                                const PhasePoint& x, const ReflectionOptions& opt = {});

// Unitary r^t psi(a) = sqrt(mu(R a)|det dR| / mu(a)) exp{(i/hbar) flux(a, o, R a)} psi(R a).
WaveFn flow_operator(const ManifoldModel& m, const AutoparallelField& W, double t, double hbar,
                     WaveFn psi, const FluxOptions& fopt = {});

// Symbols linear in momentum: g(q, p) = phi(q) + p.W(q).
struct P1Symbol {
  ScalarField phi;
  VectorField W;
  double operator()(const PhasePoint& x) const { return phi(x.q) + x.p.dot(W(x.q)); }
};

enum class PermutationKind { T, E, sigma, flow };
std::string to_string(PermutationKind k);

struct PermutationSetup {
  PermutationKind kind = PermutationKind::sigma;
  PhasePoint x;                         // for T, E, sigma
  const AutoparallelField* W = nullptr;  // for flow
  double t = 0.0;
  double hbar = 0.1;
  Grid grid;
  std::vector<WaveFn> tests;
  ReflectionOptions opt;
};

struct PermutationReport {
  PermutationKind kind;
  double residual = 0.0;  // max over tests of max|lhs - rhs| / max|rhs|
  std::vector<double> per_test;
};

// Pullback of a P1 symbol under the classical map, again in P1 form.
P1Symbol pullback_symbol(const ManifoldModel& m, const PermutationSetup& s, const P1Symbol& g);
PermutationReport permutation_check(const ManifoldModel& m, const PermutationSetup& s,
                                    const P1Symbol& g);

}  // namespace mgq
