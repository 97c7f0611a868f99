#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "mgq/connection.hpp"

namespace mgq {

// ---- triple reflections

struct TripleOptions {
  GeodesicOptions geodesic;
  int max_iter = 60;
  double tol = 1e-12;
  double dedup = 1e-6;
  // On the hyperboloid the composition of three point reflections is a Lorentz
  // matrix; its trace decides existence and its timelike eigenvector is Q.
  bool closed_form = true;
  // Sum over several distinct roots instead of reporting them as a diagnostic.
  bool sum_multiple = false;
};

struct TripleReflectionSolution {
  Vec a, b, c;
  Vec Q;
  Mat dsss;                 // d(s_c s_b s_a)(Q)
  double jacobian_J = 0.0;  // |det(I - dsss)|
  double amplitude_phi = 0.0;
  double residual = 0.0;
  bool exists = false;
  bool front_boundary = false;  // J < 1e-8 2^n
  bool in_chart = true;         // Q inside the chart; amplitude available
  int roots_found = 0;
};

// s_c s_b s_a(q) with its q-Jacobian.
ReflectResult triple_reflect(const ManifoldModel& m, const Vec& a, const Vec& b, const Vec& c,
                             const Vec& q, const GeodesicOptions& opt = {});

// All distinct fixed points found by multistart Newton, each fully evaluated.
std::vector<TripleReflectionSolution> triple_fixed_points(const ManifoldModel& m, const Vec& a,
                                                          const Vec& b, const Vec& c,
                                                          const TripleOptions& opt = {});
// The first root (or exists = false).
TripleReflectionSolution triple_fixed_point(const ManifoldModel& m, const Vec& a, const Vec& b,
                                            const Vec& c, const TripleOptions& opt = {});

// Hyperboloid helpers in the graph chart.
Eigen::Vector3d h2_embed(const Vec& q);
double h2_det(const Vec& a, const Vec& b, const Vec& c);
// Trace of the Lorentz matrix of s_c s_b s_a.
double h2_triple_trace(const Vec& a, const Vec& b, const Vec& c);

// ---- membrane phase

struct MembraneOptions {
  int nodes = 24;  // Gauss-Legendre nodes per side
  ReflectionOptions reflection;
  FluxOptions flux;
};

struct MembranePhase {
  double algebraic = 0.0;
  double geometric = 0.0;
  double difference() const { return std::abs(algebraic - geometric); }
};

// Phase S of the kernel at the fixed point of sol, computed from the reflection data at the
// corners and, independently, as line integrals of p dq + A^o along the lifted sides.
MembranePhase membrane_phase(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& y,
                             const PhasePoint& z, const TripleReflectionSolution& sol,
                             const MembraneOptions& opt = {});
double membrane_phase_algebraic(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& y,
                                const PhasePoint& z, const TripleReflectionSolution& sol,
                                const FluxOptions& fopt = {});

// Lift of the geodesic t -> exp_a(t v), t in [-1, 1], with p = dV_a^T xi - b_a and
// b_a = A^o - dPhi_a / 2. Samples are at +-t for each t in `times`.
struct ReflectiveLift {
  PhasePoint mid;
  Vec v;
  std::vector<double> t;            // signed parameters
  std::vector<PhasePoint> points;   // lifted points
  std::vector<Vec> velocity;        // dq/dt
  std::vector<Vec> potential;       // A^o at the points
};
ReflectiveLift reflective_lift(const ManifoldModel& m, const PhasePoint& mid, const Vec& v,
                               const std::vector<double>& times, const ReflectionOptions& opt = {});
// max over t of |sigma_mid(lift(t)) - lift(-t)|.
double reflective_residual(const ManifoldModel& m, const ReflectiveLift& lift,
                           const ReflectionOptions& opt = {});

// ---- the kernel

struct StarKernelSample {
  PhasePoint x, y, z;
  cplx value = 0.0;
  double phase_S = 0.0;
  bool exists = false;
  bool boundary_band = false;  // some J in the unreliable band; value left at 0
  bool multiple_roots = false;
  std::vector<TripleReflectionSolution> contributing_solutions;
};

StarKernelSample star_kernel(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& y,
                             const PhasePoint& z, double hbar, const TripleOptions& topt = {},
                             const FluxOptions& fopt = {});

enum class FrontClass { inside = 0, outside = 1, boundary = 2 };
std::string to_string(FrontClass c);

struct FrontMap {
  Vec y, z;
  Grid grid;
  std::vector<FrontClass> cls;
  std::vector<double> J;  // 0 when no triangle
  double boundary_fraction() const;
};

// Classify each scan point x as midpoint of a triangle with midpoints x, y, z.
FrontMap front_map(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                   const TripleOptions& opt = {});
void write_csv(std::ostream& os, const FrontMap& f);

// ---- groupoid convolution

struct ConvolutionOptions {
  int m_nodes = 24;   // per axis, intermediate point
  int u_nodes = 24;   // per axis, momentum Fourier inversion
  double m_span = 10.0;  // grid half-width in units of the product width
  double u_span = 10.8;
  FluxOptions flux;
};

// |k(a, b)| and the cocycle C(n', n'') for the pair (a, m), (m, b).
double k_modulus(const ManifoldModel& m, const Vec& a, const Vec& b, const GeodesicOptions& g = {});
// Phase from the flux through the triangle (a, b, m), modulus from the densities.
cplx cocycle(const ManifoldModel& m, const Vec& a, const Vec& mid, const Vec& b, double hbar,
             const FluxOptions& fopt = {});
// Same from the cochain ratio k(a, b) / (k(a, m) k(m, b)).
cplx cocycle_from_cochain(const ManifoldModel& m, const Vec& a, const Vec& mid, const Vec& b,
                          double hbar, const FluxOptions& fopt = {});
// |C(n, m o l) C(m, l) - C(n o m, l) C(n, m)| for the chain p0 -> p1 -> p2 -> p3.
double cocycle_identity_residual(const ManifoldModel& m, const Vec& p0, const Vec& p1,
                                 const Vec& p2, const Vec& p3, double hbar,
                                 const FluxOptions& fopt = {});

// (f~ (.) g~)(q, u).
cplx convolve_at(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
                 const Vec& q, const Vec& u, const ConvolutionOptions& opt = {});
// The convolution as a lazily evaluated Fourier symbol.
FourierSymbol groupoid_convolve(const ManifoldModel& m, const FourierSymbol& f,
                                const FourierSymbol& g, const ConvolutionOptions& opt = {});

// Momentum Fourier image of conj(f).
FourierSymbol conj_symbol(const FourierSymbol& f);
// f(q, p) from its Fourier image by quadrature over the u-support.
cplx symbol_value(const ManifoldModel& m, const FourierSymbol& f, const PhasePoint& x,
                  int u_nodes = 24, double u_span = 8.4);

// (f * g)(x) through the convolution; several momenta at one base point share the work.
cplx star(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
          const PhasePoint& x, const ConvolutionOptions& opt = {});
// Momentum quadrature behind star_fiber: nodes u_k and the common weight, density included.
struct FiberRule {
  std::vector<Vec> u;
  double weight = 0.0;
};
FiberRule fiber_rule(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
                     const Vec& q, const ConvolutionOptions& opt = {});
std::vector<cplx> star_fiber(const ManifoldModel& m, const FourierSymbol& f,
                             const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                             const ConvolutionOptions& opt = {});

// (f * g)(x) from the kernel: the momentum integrals over y and z are done in closed form
// (the phase is linear in them), the base points by quadrature.
struct KernelRouteOptions {
  int nodes = 16;
  double span = 7.6;
  TripleOptions triple;
  FluxOptions flux;
};
struct KernelRouteResult {
  cplx value = 0.0;
  int missing = 0;   // grid points without a triangle
  int boundary = 0;  // grid points in the unreliable band (skipped)
};
KernelRouteResult star_via_kernel(const ManifoldModel& m, const FourierSymbol& f,
                                  const FourierSymbol& g, const PhasePoint& x,
                                  const KernelRouteOptions& opt = {});

// tr(f * conj g) = Int mu(q) (f~ (.) conj g~)(q, 0) dq over a box.
cplx trace_of_product(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
                      const Vec& lo, const Vec& hi, int q_nodes, const ConvolutionOptions& opt = {});

// ---- Gaussian test symbols and the Moyal oracles

// f(x) = (c0 + c1.x) exp(-x^T A x / 2 + b.x), x = (q, p) in chart components,
// A real symmetric with positive-definite momentum block.
struct GaussianSymbol {
  int n = 0;
  PMat A;
  Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxPhaseDim, 1> b;
  cplx c0 = 1.0;
  Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxPhaseDim, 1> c1;

  using CPVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxPhaseDim, 1>;
  using CPMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxPhaseDim, kMaxPhaseDim>;

  // exp(-|x - x0|_A^2 / 2 + i k.(x - x0)) with amplitude c0.
  static GaussianSymbol centered(const PMat& A, const PVec& x0, const PVec& k, cplx amp = 1.0);

  cplx operator()(const PhasePoint& x) const;
  CPVec gradient(const PhasePoint& x) const;
  CPMat hessian(const PhasePoint& x) const;
  GaussianSymbol conj() const;
  // u-width of the Fourier image relative to hbar.
  double momentum_scale() const;
  FourierSymbol fourier(const ManifoldModel& m, double hbar) const;
};

// Random well-conditioned Gaussian symbol near (q0, p0).
GaussianSymbol random_gaussian(std::mt19937_64& rng, int n, const PVec& x0, double width_lo,
                               double width_hi, double k_max);

// Product for a constant Poisson structure Psi = Omega^{-1}, exact on Gaussian symbols
// without a linear prefactor: Int f(x + y) g(x + z) e^{(2i/hbar) y.W z} dy dz / (pi hbar)^{2n}
// with W = -Omega^T.
cplx moyal_gaussian(const GaussianSymbol& f, const GaussianSymbol& g, const PhasePoint& x,
                    const PMat& omega, double hbar);
// Flat (Omega = standard) and constant-field magnetic oracles.
cplx moyal_flat(const GaussianSymbol& f, const GaussianSymbol& g, const PhasePoint& x, double hbar);
cplx moyal_magnetic(const GaussianSymbol& f, const GaussianSymbol& g, const PhasePoint& x,
                    const Mat& F, double hbar);

// ---- hbar expansion

struct ExpansionOptions {
  std::vector<double> sweep{0.2, 0.1, 0.05, 0.025};
  ConvolutionOptions conv;
  // c in B = c Psi R Psi. The convolution product realizes c = 1; 3 is the commonly quoted value.
  double ricci_coefficient = 3.0;
};

struct ExpansionReport {
  PhasePoint x;
  std::vector<double> hbar_sweep;
  std::vector<cplx> exact;
  std::vector<cplx> order0, order1, order2;
  std::vector<double> res0, res1, res2;
  double o0 = 0.0, o1 = 0.0, o2 = 0.0;  // fitted log-log slopes
  cplx poisson = 0.0;                    // {f, g}
  cplx second = 0.0;                     // bracket of the hbar^2 term
  double floor = 0.0;                    // smallest residual: fit degenerate when near roundoff
  double ricci_coefficient = 3.0;
  std::string to_json() const;
  void write_csv(std::ostream& os) const;
};

// {f, g} = df . Psi dg, and the second-order bracket
// (nabla' Psi nabla'')^2 (f x g) + c (Psi Ric Psi)(df, dg).
cplx poisson_bracket(const ManifoldModel& m, const GaussianSymbol& f, const GaussianSymbol& g,
                     const PhasePoint& x);
cplx second_order_bracket(const ManifoldModel& m, const GaussianSymbol& f, const GaussianSymbol& g,
                          const PhasePoint& x, double ricci_coefficient = 3.0);

ExpansionReport expansion_check(const ManifoldModel& m, const GaussianSymbol& f,
                                const GaussianSymbol& g, const PhasePoint& x,
                                const ExpansionOptions& opt = {});

double loglog_slope(const std::vector<double>& h, const std::vector<double>& r);

}  // namespace mgq
