#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "mgq/magnetic.hpp"

namespace mgq {

using WaveFn = std::function<cplx(const Vec&)>;
using KernelFn = std::function<cplx(const Vec& a, const Vec& b)>;
// Fourier image f~(q, u) of a symbol in the momentum variable.
using FourierFn = std::function<cplx(const Vec& q, const Vec& u)>;
using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Rectangular node grid: n[i] equispaced nodes from lo[i] to hi[i] inclusive.
struct Grid {
  Vec lo;
  Vec hi;
  std::vector<int> n;

  static Grid square(int dim, double half_width, int nodes);
  int dim() const { return static_cast<int>(n.size()); }
  std::size_t size() const;
  Vec spacing() const;
  double cell_volume() const;
  Vec point(std::size_t idx) const;
  std::vector<Vec> points() const;
};

struct WaveFunction {
  Grid grid;
  std::vector<cplx> values;
  double hbar = 0.1;
};

struct OperatorKernel {
  Grid grid_a;
  Grid grid_b;
  std::vector<cplx> values;  // row-major in a
  double hbar = 0.1;
  bool self_adjoint = false;
  cplx at(std::size_t ia, std::size_t ib) const { return values[ia * grid_b.size() + ib]; }
};

struct FourierSymbol {
  FourierFn f;
  double hbar = 0.1;
  double support_radius = 1.0;
};

WaveFunction sample(const Grid& grid, const WaveFn& psi, double hbar);
// (psi, chi) = sum psi conj(chi) mu dV over the grid.
cplx inner(const ManifoldModel& m, const WaveFunction& psi, const WaveFunction& chi);
double l2_norm(const ManifoldModel& m, const WaveFunction& psi);
// Samples within `margin` (fraction of the box) of the boundary must be below tol.
void require_boundary_decay(const WaveFunction& psi, double margin = 0.1, double tol = 1e-12);
void write_csv(std::ostream& os, const WaveFunction& psi);
void write_csv(std::ostream& os, const OperatorKernel& k);

// Factors of the quantizer: Delta_x = |Delta_x| E_x T_x.
// T_x: reflection pullback with its measure amplitude (a unitary involution).
WaveFn reflection_operator(const ManifoldModel& m, const Vec& q, WaveFn psi,
                           const GeodesicOptions& gopt = {});
// E_x: multiplication by exp{(i/hbar)(2 p.V_q(a) + Phi_q(a))}.
WaveFn phase_operator(const ManifoldModel& m, const PhasePoint& x, double hbar, WaveFn psi,
                      bool inverse = false, const FluxOptions& fopt = {});
double quantizer_phase(const ManifoldModel& m, const PhasePoint& x, const Vec& a,
                       const FluxOptions& fopt = {});
// Unitary part E_x T_x.
WaveFn unitary_quantizer(const ManifoldModel& m, const PhasePoint& x, double hbar, WaveFn psi,
                         const FluxOptions& fopt = {});
// Full quantizer as a closure; the delta kernel acts by exact pullback.
WaveFn quantizer(const ManifoldModel& m, const PhasePoint& x, double hbar, WaveFn psi,
                 const FluxOptions& fopt = {});
cplx quantizer_at(const ManifoldModel& m, const PhasePoint& x, double hbar, const WaveFn& psi,
                  const Vec& a, const FluxOptions& fopt = {});
WaveFunction apply_quantizer(const ManifoldModel& m, const PhasePoint& x, const WaveFn& psi,
                             const Grid& grid, double hbar, const FluxOptions& fopt = {});

// Cochain k(a, b) with the midpoint supplied or solved for.
cplx k_cochain(const ManifoldModel& m, const Vec& a, const Vec& b, double hbar,
               const FluxOptions& fopt = {});
cplx k_cochain_at(const ManifoldModel& m, const Vec& c, const Vec& a, const Vec& b, double hbar,
                  const FluxOptions& fopt = {});

// Kernel of the operator with Fourier symbol f: F(a,b) = f~(a v b, a ^ b) / k(a, b).
cplx kernel_value(const ManifoldModel& m, const FourierSymbol& f, const Vec& a, const Vec& b,
                  const FluxOptions& fopt = {});
KernelFn kernel_fn(const ManifoldModel& m, const FourierSymbol& f, const FluxOptions& fopt = {});
OperatorKernel kernel_from_symbol(const ManifoldModel& m, const FourierSymbol& f, const Grid& ga,
                                  const Grid& gb, const FluxOptions& fopt = {});

// Uniform u-grid for the Wigner integral: nodes per axis over [-radius, radius).
struct UQuadrature {
  double radius = 1.0;
  int nodes = 48;
  // Smallest node count with at least `per_wave` points per oscillation of e^{-iup/hbar}.
  static UQuadrature nyquist(double radius, double hbar, double p_max, int per_wave = 8);
};

// Samples of G(u) = (k F)(exp_q(u/2), exp_q(-u/2)) at one base point; the symbol at any
// p is then a plain Fourier sum.
struct WignerSlice {
  Vec q;
  double hbar = 0.1;
  double mu = 1.0;
  double du_volume = 1.0;
  std::vector<Vec> u;
  std::vector<cplx> G;
  cplx symbol(const Vec& p) const;
  // Momenta dual to the u-grid, for exact discrete inversion.
  std::vector<Vec> dual_momenta() const;
  double dp_volume() const;
};

WignerSlice wigner_slice(const ManifoldModel& m, const KernelFn& K, const Vec& q, double hbar,
                         const UQuadrature& uq, const FluxOptions& fopt = {});
cplx wigner_symbol(const ManifoldModel& m, const KernelFn& K, const PhasePoint& x, double hbar,
                   const UQuadrature& uq, const FluxOptions& fopt = {});
// Inverse momentum Fourier transform of symbol samples f(q, p_j) with cell volume dp.
cplx fourier_from_samples(const ManifoldModel& m, const Vec& q, const Vec& u,
                          const std::vector<Vec>& p, const std::vector<cplx>& f, double dp_volume,
                          double hbar);

// Closed-form Fourier image of f(q,p) = a(q) exp(-|p - p0|^2 / (2 s^2)) (chart components).
FourierSymbol gaussian_momentum_symbol(const ManifoldModel& m, ScalarField a, const Vec& p0,
                                       double s, double hbar);

// rho_{psi|chi}(x) = (Delta_x psi, chi).
cplx wigner_function(const ManifoldModel& m, const WaveFn& psi, const WaveFn& chi,
                     const PhasePoint& x, const Grid& grid, double hbar,
                     const FluxOptions& fopt = {});

// Linear differential operator c2^{jk} d_j d_k + c1^j d_j + c0 acting on closures.
// Derivatives use fourth-order central stencils with step h.
struct DifferentialOperator {
  int dim = 0;
  std::function<Mat(const Vec&)> c2;  // optional, real and symmetric
  std::function<CVec(const Vec&)> c1;
  std::function<cplx(const Vec&)> c0;

  cplx apply_at(const WaveFn& psi, const Vec& a, double h) const;
  WaveFn apply(WaveFn psi, double h) const;
  WaveFunction apply(const WaveFn& psi, const Grid& grid, double hbar) const;
};

// Stencil helpers on closures.
CVec fd_gradient(const WaveFn& f, const Vec& a, double h);
CMat fd_hessian(const WaveFn& f, const Vec& a, double h);
// div_mu W = (1/mu) d_j (mu W^j).
double measure_divergence(const ManifoldModel& m, const VectorField& W, const Vec& q,
                          double h = 1e-3);

struct P1Options {
  int potential_nodes = 24;
  double div_step = 1e-3;
};
// Quantization of phi(q) + p.W(q): -i hbar (W + div W / 2) - A^o.W + phi.
DifferentialOperator quantize_p1(const ManifoldModel& m, ScalarField phi, VectorField W,
                                 double hbar, const P1Options& opt = {});
// g^{jk}(-i hbar nabla_j - A^o_j)(-i hbar nabla_k - A^o_k) for metric models.
DifferentialOperator quantize_quadratic(const ManifoldModel& m, double hbar,
                                        const P1Options& opt = {});

}  // namespace mgq
