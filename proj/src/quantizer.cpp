#include "mgq/quantizer.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <ostream>

namespace mgq {

namespace {

constexpr cplx I{0.0, 1.0};

// Multi-index walk over a box of nodes; index 0 is the slowest axis.
std::vector<int> unravel(std::size_t idx, const std::vector<int>& n) {
  std::vector<int> out(n.size());
  for (int d = static_cast<int>(n.size()) - 1; d >= 0; --d) {
    out[d] = static_cast<int>(idx % n[d]);
    idx /= n[d];
  }
  return out;
}

std::size_t total(const std::vector<int>& n) {
  std::size_t s = 1;
  for (int k : n) s *= static_cast<std::size_t>(k);
  return s;
}

double measure_ratio(const ManifoldModel& m, const Vec& a, const ReflectResult& r) {
  return m.density(r.point) * std::abs(r.d_da.determinant()) / m.density(a);
}

}  // namespace

// ---------------------------------------------------------------- grids

Grid Grid::square(int dim, double half_width, int nodes) {
  Grid g;
  g.lo = Vec::Constant(dim, -half_width);
  g.hi = Vec::Constant(dim, half_width);
  g.n.assign(dim, nodes);
  return g;
}

std::size_t Grid::size() const { return total(n); }

Vec Grid::spacing() const {
  Vec h(dim());
  for (int d = 0; d < dim(); ++d) h[d] = (hi[d] - lo[d]) / (n[d] - 1);
  return h;
}

double Grid::cell_volume() const { return spacing().prod(); }

Vec Grid::point(std::size_t idx) const {
  auto ix = unravel(idx, n);
  Vec h = spacing();
  Vec x(dim());
  for (int d = 0; d < dim(); ++d) x[d] = lo[d] + ix[d] * h[d];
  return x;
}

std::vector<Vec> Grid::points() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

WaveFunction sample(const Grid& grid, const WaveFn& psi, double hbar) {
  WaveFunction w{grid, std::vector<cplx>(grid.size()), hbar};
  for (std::size_t i = 0; i < grid.size(); ++i) w.values[i] = psi(grid.point(i));
  return w;
}

cplx inner(const ManifoldModel& m, const WaveFunction& psi, const WaveFunction& chi) {
  if (psi.values.size() != chi.values.size()) throw ModelError("inner: grid mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    s += psi.values[i] * std::conj(chi.values[i]) * m.density(psi.grid.point(i));
  return s * psi.grid.cell_volume();
}

double l2_norm(const ManifoldModel& m, const WaveFunction& psi) {
  return std::sqrt(std::abs(inner(m, psi, psi)));
}

void require_boundary_decay(const WaveFunction& psi, double margin, double tol) {
  const Grid& g = psi.grid;
  Vec width = g.hi - g.lo;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    bool near = false;
    for (int d = 0; d < g.dim(); ++d)
      near = near || x[d] - g.lo[d] < margin * width[d] || g.hi[d] - x[d] < margin * width[d];
    if (near && std::abs(psi.values[i]) > tol)
      throw ModelError("wave function does not vanish in the grid boundary margin");
  }
}

void write_csv(std::ostream& os, const WaveFunction& psi) {
  for (int d = 0; d < psi.grid.dim(); ++d) os << 'q' << d + 1 << ',';
  os << "re,im\n";
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    Vec x = psi.grid.point(i);
    for (int d = 0; d < x.size(); ++d) os << x[d] << ',';
    os << psi.values[i].real() << ',' << psi.values[i].imag() << '\n';
  }
}

void write_csv(std::ostream& os, const OperatorKernel& k) {
  for (int d = 0; d < k.grid_a.dim(); ++d) os << 'a' << d + 1 << ',';
  for (int d = 0; d < k.grid_b.dim(); ++d) os << 'b' << d + 1 << ',';
  os << "re,im\n";
  for (std::size_t ia = 0; ia < k.grid_a.size(); ++ia) {
    Vec a = k.grid_a.point(ia);
    for (std::size_t ib = 0; ib < k.grid_b.size(); ++ib) {
      Vec b = k.grid_b.point(ib);
      for (int d = 0; d < a.size(); ++d) os << a[d] << ',';
      for (int d = 0; d < b.size(); ++d) os << b[d] << ',';
      cplx v = k.at(ia, ib);
      os << v.real() << ',' << v.imag() << '\n';
    }
  }
}

// ---------------------------------------------------------------- quantizer

WaveFn reflection_operator(const ManifoldModel& m, const Vec& q, WaveFn psi,
                           const GeodesicOptions& gopt) {
  return [m, q, psi = std::move(psi), gopt](const Vec& a) -> cplx {
    ReflectResult r = reflect_full(m, q, a, gopt);
    return std::sqrt(measure_ratio(m, a, r)) * psi(r.point);
  };
}

double quantizer_phase(const ManifoldModel& m, const PhasePoint& x, const Vec& a,
                       const FluxOptions& fopt) {
  Vec v = log_map(m, x.q, a, fopt.geodesic);
  return 2.0 * x.p.dot(v) + phi(m, x.q, a, fopt);
}

WaveFn phase_operator(const ManifoldModel& m, const PhasePoint& x, double hbar, WaveFn psi,
                      bool inverse, const FluxOptions& fopt) {
  const double sign = inverse ? -1.0 : 1.0;
  return [m, x, hbar, psi = std::move(psi), sign, fopt](const Vec& a) -> cplx {
    return std::exp(sign * I * quantizer_phase(m, x, a, fopt) / hbar) * psi(a);
  };
}

WaveFn unitary_quantizer(const ManifoldModel& m, const PhasePoint& x, double hbar, WaveFn psi,
                         const FluxOptions& fopt) {
  return phase_operator(m, x, hbar, reflection_operator(m, x.q, std::move(psi), fopt.geodesic),
                        false, fopt);
}

cplx quantizer_at(const ManifoldModel& m, const PhasePoint& x, double hbar, const WaveFn& psi,
                  const Vec& a, const FluxOptions& fopt) {
  const int n = m.dim;
  ReflectResult r = reflect_full(m, x.q, a, fopt.geodesic);
  double J = j_density(m, x.q, a, fopt.geodesic) * measure_ratio(m, a, r);
  double amp = std::pow(std::numbers::pi * hbar, -n) * std::sqrt(J);
  return amp * std::exp(I * quantizer_phase(m, x, a, fopt) / hbar) * psi(r.point);
}

WaveFn quantizer(const ManifoldModel& m, const PhasePoint& x, double hbar, WaveFn psi,
                 const FluxOptions& fopt) {
  return [m, x, hbar, psi = std::move(psi), fopt](const Vec& a) {
    return quantizer_at(m, x, hbar, psi, a, fopt);
  };
}

WaveFunction apply_quantizer(const ManifoldModel& m, const PhasePoint& x, const WaveFn& psi,
                             const Grid& grid, double hbar, const FluxOptions& fopt) {
  m.require_in_chart(x.q, "apply_quantizer");
  WaveFunction out{grid, std::vector<cplx>(grid.size()), hbar};
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.values[i] = quantizer_at(m, x, hbar, psi, grid.point(i), fopt);
  return out;
}

// ---------------------------------------------------------------- symbols and kernels

cplx k_cochain_at(const ManifoldModel& m, const Vec& c, const Vec& a, const Vec& b, double hbar,
                  const FluxOptions& fopt) {
  DensityPack d = densities(m, c, a, fopt.geodesic);
  double Phi = m.field_is_zero() ? 0.0 : flux(m, a, m.base_point, b, fopt);
  return std::sqrt(d.j * d.e_at_a * d.e_at_b) * std::exp(-I * Phi / hbar);
}

cplx k_cochain(const ManifoldModel& m, const Vec& a, const Vec& b, double hbar,
               const FluxOptions& fopt) {
  Midpoint mp = midpoint(m, a, b, fopt.geodesic);
  return k_cochain_at(m, mp.c, a, b, hbar, fopt);
}

cplx kernel_value(const ManifoldModel& m, const FourierSymbol& f, const Vec& a, const Vec& b,
                  const FluxOptions& fopt) {
  Midpoint mp = midpoint(m, a, b, fopt.geodesic);
  cplx k = k_cochain_at(m, mp.c, a, b, f.hbar, fopt);
  if (std::abs(k) < 1e-12) throw NumericalError("kernel_value: vanishing cochain");
  return f.f(mp.c, mp.u) / k;
}

KernelFn kernel_fn(const ManifoldModel& m, const FourierSymbol& f, const FluxOptions& fopt) {
  return [m, f, fopt](const Vec& a, const Vec& b) { return kernel_value(m, f, a, b, fopt); };
}

OperatorKernel kernel_from_symbol(const ManifoldModel& m, const FourierSymbol& f, const Grid& ga,
                                  const Grid& gb, const FluxOptions& fopt) {
  OperatorKernel K{ga, gb, std::vector<cplx>(ga.size() * gb.size()), f.hbar, false};
  for (std::size_t i = 0; i < ga.size(); ++i) {
    Vec a = ga.point(i);
    for (std::size_t j = 0; j < gb.size(); ++j) {
      Vec b = gb.point(j);
      // Outside the u-support the Fourier image vanishes; skip the midpoint solve.
      if ((a - b).norm() > 4.0 * f.support_radius) continue;
      K.values[i * gb.size() + j] = kernel_value(m, f, a, b, fopt);
    }
  }
  return K;
}

UQuadrature UQuadrature::nyquist(double radius, double hbar, double p_max, int per_wave) {
  // The phase u.p/hbar advances 2 pi per 2 pi hbar / p_max in u.
  double wavelength = 2.0 * std::numbers::pi * hbar / std::max(p_max, 1e-12);
  int nodes = static_cast<int>(std::ceil(2.0 * radius * per_wave / wavelength));
  return {radius, std::max(nodes + (nodes % 2), 8)};
}

WignerSlice wigner_slice(const ManifoldModel& m, const KernelFn& K, const Vec& q, double hbar,
                         const UQuadrature& uq, const FluxOptions& fopt) {
  const int n = m.dim;
  WignerSlice s;
  s.q = q;
  s.hbar = hbar;
  s.mu = m.density(q);
  const double du = 2.0 * uq.radius / uq.nodes;
  s.du_volume = std::pow(du, n);
  std::vector<int> dims(n, uq.nodes);
  const std::size_t N = total(dims);
  s.u.reserve(N);
  s.G.reserve(N);
  for (std::size_t idx = 0; idx < N; ++idx) {
    auto ix = unravel(idx, dims);
    Vec u(n);
    for (int d = 0; d < n; ++d) u[d] = (ix[d] - uq.nodes / 2) * du;
    Vec a = exp_point(m, q, 0.5 * u, fopt.geodesic);
    Vec b = exp_point(m, q, -0.5 * u, fopt.geodesic);
    cplx kab = u.norm() == 0.0 ? cplx(1.0) : k_cochain_at(m, q, a, b, hbar, fopt);
    s.u.push_back(u);
    s.G.push_back(kab * K(a, b));
  }
  return s;
}

cplx WignerSlice::symbol(const Vec& p) const {
  cplx acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) acc += std::exp(-I * u[k].dot(p) / hbar) * G[k];
  return mu * du_volume * acc;
}

std::vector<Vec> WignerSlice::dual_momenta() const {
  const int n = static_cast<int>(q.size());
  const int N = static_cast<int>(std::lround(std::pow(static_cast<double>(u.size()), 1.0 / n)));
  const double du = std::pow(du_volume, 1.0 / n);
  const double dp = 2.0 * std::numbers::pi * hbar / (N * du);
  std::vector<int> dims(n, N);
  std::vector<Vec> out;
  out.reserve(u.size());
  for (std::size_t idx = 0; idx < u.size(); ++idx) {
    auto ix = unravel(idx, dims);
    Vec p(n);
    for (int d = 0; d < n; ++d) p[d] = (ix[d] - N / 2) * dp;
    out.push_back(p);
  }
  return out;
}

double WignerSlice::dp_volume() const {
  const int n = static_cast<int>(q.size());
  const double N = std::pow(static_cast<double>(u.size()), 1.0 / n);
  const double du = std::pow(du_volume, 1.0 / n);
  return std::pow(2.0 * std::numbers::pi * hbar / (N * du), n);
}

cplx wigner_symbol(const ManifoldModel& m, const KernelFn& K, const PhasePoint& x, double hbar,
                   const UQuadrature& uq, const FluxOptions& fopt) {
  return wigner_slice(m, K, x.q, hbar, uq, fopt).symbol(x.p);
}

cplx fourier_from_samples(const ManifoldModel& m, const Vec& q, const Vec& u,
                          const std::vector<Vec>& p, const std::vector<cplx>& f, double dp_volume,
                          double hbar) {
  const int n = m.dim;
  cplx acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) acc += std::exp(I * u.dot(p[j]) / hbar) * f[j];
  return acc * dp_volume / (std::pow(2.0 * std::numbers::pi * hbar, n) * m.density(q));
}

FourierSymbol gaussian_momentum_symbol(const ManifoldModel& m, ScalarField a, const Vec& p0,
                                       double s, double hbar) {
  const int n = m.dim;
  const double pref =
      std::pow(2.0 * std::numbers::pi * hbar, -n) * std::pow(2.0 * std::numbers::pi * s * s, 0.5 * n);
  FourierSymbol f;
  f.hbar = hbar;
  f.support_radius = 8.6 * hbar / s;  // e^{-s^2 u^2 / 2 hbar^2} < 1e-16 beyond
  f.f = [m, a = std::move(a), p0, s, hbar, pref](const Vec& q, const Vec& u) -> cplx {
    double g = std::exp(-s * s * u.squaredNorm() / (2.0 * hbar * hbar));
    return pref * a(q) / m.density(q) * g * std::exp(I * u.dot(p0) / hbar);
  };
  return f;
}

cplx wigner_function(const ManifoldModel& m, const WaveFn& psi, const WaveFn& chi,
                     const PhasePoint& x, const Grid& grid, double hbar, const FluxOptions& fopt) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec a = grid.point(i);
    cplx c = chi(a);
    if (c == 0.0) continue;
    acc += quantizer_at(m, x, hbar, psi, a, fopt) * std::conj(c) * m.density(a);
  }
  return acc * grid.cell_volume();
}

// ---------------------------------------------------------------- differential operators

CVec fd_gradient(const WaveFn& f, const Vec& a, double h) {
  const int n = static_cast<int>(a.size());
  CVec g(n);
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e[j] = h;
    g[j] = (-f(a + 2 * e) + 8.0 * f(a + e) - 8.0 * f(a - e) + f(a - 2 * e)) / (12.0 * h);
  }
  return g;
}

CMat fd_hessian(const WaveFn& f, const Vec& a, double h) {
  const int n = static_cast<int>(a.size());
  CMat H(n, n);
  const cplx f0 = f(a);
  static constexpr double w1[4] = {1.0, -8.0, 8.0, -1.0};
  static constexpr int s1[4] = {-2, -1, 1, 2};
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e[j] = h;
    H(j, j) = (-f(a + 2 * e) + 16.0 * f(a + e) - 30.0 * f0 + 16.0 * f(a - e) - f(a - 2 * e)) /
              (12.0 * h * h);
    for (int k = 0; k < j; ++k) {
      Vec ek = Vec::Zero(n);
      ek[k] = h;
      cplx acc = 0.0;
      for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) acc += w1[x] * w1[y] * f(a + s1[x] * e + s1[y] * ek);
      H(j, k) = H(k, j) = acc / (144.0 * h * h);
    }
  }
  return H;
}

double measure_divergence(const ManifoldModel& m, const VectorField& W, const Vec& q, double h) {
  const int n = m.dim;
  double div = 0.0;
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e[j] = h;
    auto muW = [&](const Vec& x) { return m.density(x) * W(x)[j]; };
    div += (-muW(q + 2 * e) + 8.0 * muW(q + e) - 8.0 * muW(q - e) + muW(q - 2 * e)) / (12.0 * h);
  }
  return div / m.density(q);
}

cplx DifferentialOperator::apply_at(const WaveFn& psi, const Vec& a, double h) const {
  cplx out = 0.0;
  if (c0) out += c0(a) * psi(a);
  if (c1) out += (c1(a).transpose() * fd_gradient(psi, a, h))(0, 0);
  if (c2) {
    Mat C = c2(a);
    CMat H = fd_hessian(psi, a, h);
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) out += C(j, k) * H(j, k);
  }
  return out;
}

WaveFn DifferentialOperator::apply(WaveFn psi, double h) const {
  return [op = *this, psi = std::move(psi), h](const Vec& a) { return op.apply_at(psi, a, h); };
}

WaveFunction DifferentialOperator::apply(const WaveFn& psi, const Grid& grid, double hbar) const {
  WaveFunction out{grid, std::vector<cplx>(grid.size()), hbar};
  const double h = grid.spacing().minCoeff();
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = apply_at(psi, grid.point(i), h);
  return out;
}

DifferentialOperator quantize_p1(const ManifoldModel& m, ScalarField phi, VectorField W,
                                 double hbar, const P1Options& opt) {
  DifferentialOperator op;
  op.dim = m.dim;
  op.c1 = [W, hbar](const Vec& a) -> CVec { return (-I * hbar) * W(a).cast<cplx>(); };
  op.c0 = [m, phi = std::move(phi), W, hbar, opt](const Vec& a) -> cplx {
    double div = measure_divergence(m, W, a, opt.div_step);
    Vec A = radial_potential(m, m.base_point, a, opt.potential_nodes);
    double real_part = (phi ? phi(a) : 0.0) - A.dot(W(a));
    return cplx(real_part, -0.5 * hbar * div);
  };
  return op;
}

DifferentialOperator quantize_quadratic(const ManifoldModel& m, double hbar, const P1Options& opt) {
  if (!m.has_metric()) throw ModelError("quantize_quadratic: model has no metric");
  const int n = m.dim;
  DifferentialOperator op;
  op.dim = n;
  op.c2 = [m, hbar](const Vec& a) -> Mat { return -hbar * hbar * m.metric(a).inverse(); };
  op.c1 = [m, n, hbar, opt](const Vec& a) -> CVec {
    Mat gi = m.metric(a).inverse();
    T3 G = m.christoffel(a);
    Vec A = radial_potential(m, m.base_point, a, opt.potential_nodes);
    CVec c(n);
    for (int l = 0; l < n; ++l) {
      double trG = 0.0;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) trG += gi(j, k) * G(l, j, k);
      c[l] = hbar * hbar * trG + 2.0 * I * hbar * (gi * A)[l];
    }
    return c;
  };
  op.c0 = [m, n, hbar, opt](const Vec& a) -> cplx {
    Mat gi = m.metric(a).inverse();
    T3 G = m.christoffel(a);
    auto pot = [&](const Vec& x) { return radial_potential(m, m.base_point, x, opt.potential_nodes); };
    Vec A = pot(a);
    const double h = opt.div_step;
    Mat dA(n, n);  // dA(j, k) = d_j A_k
    for (int j = 0; j < n; ++j) {
      Vec e = Vec::Zero(n);
      e[j] = h;
      Vec d = (-pot(a + 2 * e) + 8.0 * pot(a + e) - 8.0 * pot(a - e) + pot(a - 2 * e)) / (12.0 * h);
      dA.row(j) = d.transpose();
    }
    double divA = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double nab = dA(j, k);
        for (int l = 0; l < n; ++l) nab -= G(l, j, k) * A[l];
        divA += gi(j, k) * nab;
      }
    return cplx(A.dot(gi * A), hbar * divA);
  };
  return op;
}

}  // namespace mgq
