#include "mgq/star_product.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <random>

#include "mgq/quadrature.hpp"

namespace mgq {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;
// Gaussian symbols carry e^{-x^2/2} decay; 8.6 standard deviations reach 1e-16.
constexpr double kSupportSigmas = 8.6;

using CPVec = GaussianSymbol::CPVec;
using CPMat = GaussianSymbol::CPMat;

double sigma_of(const FourierSymbol& f) { return f.support_radius / kSupportSigmas; }

// Equispaced trapezoid nodes over a cube, as offsets from its centre.
struct CubeRule {
  std::vector<Vec> offsets;
  double weight = 1.0;
};

CubeRule cube_rule(int dim, double half, int nodes) {
  CubeRule r;
  const double h = 2.0 * half / nodes;
  r.weight = std::pow(h, dim);
  std::vector<int> ix(dim, 0);
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= nodes;
  r.offsets.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    Vec o(dim);
    for (int d = dim - 1; d >= 0; --d) {
      // Cell centres: symmetric about 0 and never on the boundary.
      o[d] = -half + (static_cast<double>(rem % nodes) + 0.5) * h;
      rem /= nodes;
    }
    r.offsets.push_back(o);
  }
  return r;
}

Eigen::Matrix3d lorentz_reflection(const Vec& a) {
  Eigen::Vector3d X = h2_embed(a);
  Eigen::Matrix3d eta = Eigen::Vector3d(1, 1, -1).asDiagonal();
  return -Eigen::Matrix3d::Identity() - 2.0 * X * X.transpose() * eta;
}

bool distinct(const std::vector<Vec>& roots, const Vec& q, double tol) {
  for (const auto& r : roots)
    if ((r - q).norm() < tol * std::max(1.0, q.norm())) return false;
  return true;
}

// Newton on s_c s_b s_a(Q) - Q from one start.
std::optional<Vec> newton_fixed_point(const ManifoldModel& m, const Vec& a, const Vec& b,
                                      const Vec& c, Vec Q, const TripleOptions& opt) {
  const int n = m.dim;
  double res = 0.0;
  try {
    ReflectResult R = triple_reflect(m, a, b, c, Q, opt.geodesic);
    Vec r = R.point - Q;
    res = r.norm();
    for (int it = 0; it < opt.max_iter; ++it) {
      if (res <= opt.tol * std::max(1.0, Q.norm())) return Q;
      Mat D = R.d_da - Mat::Identity(n, n);
      Eigen::FullPivLU<Mat> lu(D);
      if (lu.rank() < n) return std::nullopt;
      Vec step = -lu.solve(r);
      double lambda = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 30 && !moved; ++bt, lambda *= 0.5) {
        Vec Qt = Q + lambda * step;
        if (!m.in_chart(Qt)) continue;
        try {
          ReflectResult Rt = triple_reflect(m, a, b, c, Qt, opt.geodesic);
          double rt = (Rt.point - Qt).norm();
          if (rt < res || rt <= opt.tol * std::max(1.0, Qt.norm())) {
            Q = Qt;
            R = Rt;
            r = Rt.point - Qt;
            res = rt;
            moved = true;
          }
        } catch (const NumericalError&) {
        }
      }
      if (!moved) break;
    }
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  if (res <= 1e-10 * std::max(1.0, Q.norm())) return Q;
  return std::nullopt;
}

TripleReflectionSolution evaluate_solution(const ManifoldModel& m, const Vec& a, const Vec& b,
                                           const Vec& c, const Vec& Q, const GeodesicOptions& g) {
  const int n = m.dim;
  TripleReflectionSolution s;
  s.a = a;
  s.b = b;
  s.c = c;
  s.Q = Q;
  ReflectResult R = triple_reflect(m, a, b, c, Q, g);
  s.residual = (R.point - Q).norm();
  s.dsss = R.d_da;
  s.jacobian_J = std::abs((Mat::Identity(n, n) - s.dsss).determinant());
  Vec Q1 = reflect(m, a, Q, g);
  Vec Q2 = reflect(m, b, Q1, g);
  const double j = j_density(m, a, Q, g) * j_density(m, b, Q1, g) * j_density(m, c, Q2, g);
  s.amplitude_phi = std::pow(2.0, n) * std::sqrt(j * std::abs(s.dsss.determinant()));
  s.exists = true;
  s.front_boundary = s.jacobian_J < 1e-8 * std::pow(2.0, n);
  return s;
}

}  // namespace

// ---------------------------------------------------------------- triples

Eigen::Vector3d h2_embed(const Vec& q) {
  return {q[0], q[1], std::sqrt(1.0 + q[0] * q[0] + q[1] * q[1])};
}

double h2_det(const Vec& a, const Vec& b, const Vec& c) {
  Eigen::Matrix3d M;
  M << h2_embed(a), h2_embed(b), h2_embed(c);
  return M.determinant();
}

double h2_triple_trace(const Vec& a, const Vec& b, const Vec& c) {
  return (lorentz_reflection(c) * lorentz_reflection(b) * lorentz_reflection(a)).trace();
}

ReflectResult triple_reflect(const ManifoldModel& m, const Vec& a, const Vec& b, const Vec& c,
                             const Vec& q, const GeodesicOptions& opt) {
  ReflectResult r1 = reflect_full(m, a, q, opt);
  ReflectResult r2 = reflect_full(m, b, r1.point, opt);
  ReflectResult r3 = reflect_full(m, c, r2.point, opt);
  ReflectResult out;
  out.point = r3.point;
  out.d_da = r3.d_da * r2.d_da * r1.d_da;
  out.d_dq = Mat();  // not meaningful for the composition
  return out;
}

std::vector<TripleReflectionSolution> triple_fixed_points(const ManifoldModel& m, const Vec& a,
                                                          const Vec& b, const Vec& c,
                                                          const TripleOptions& opt) {
  std::vector<TripleReflectionSolution> out;
  if (opt.closed_form && m.geodesic_kind == GeodesicKind::hyperboloid) {
    // An orientation-preserving isometry of H^2 has a fixed point iff it is elliptic,
    // i.e. the trace of its Lorentz matrix is below 3; then 3 - tr = det(I - d sss).
    Eigen::Matrix3d L = lorentz_reflection(c) * lorentz_reflection(b) * lorentz_reflection(a);
    const double tr = L.trace();
    if (!(tr < 3.0)) return out;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(L - Eigen::Matrix3d::Identity());
    lu.setThreshold(1e-10);
    Eigen::MatrixXd ker = lu.kernel();
    Eigen::Vector3d v = ker.col(0);
    double norm2 = v[2] * v[2] - v[0] * v[0] - v[1] * v[1];
    if (!(norm2 > 0.0)) return out;
    v /= std::sqrt(norm2) * (v[2] < 0 ? -1.0 : 1.0);
    Vec Q(2);
    Q << v[0], v[1];
    TripleReflectionSolution s;
    bool evaluated = false;
    if (m.in_chart(Q)) {
      try {
        // Polishing keeps the residual at the level of the chart maps.
        if (auto P = newton_fixed_point(m, a, b, c, Q, opt)) Q = *P;
        s = evaluate_solution(m, a, b, c, Q, opt.geodesic);
        evaluated = true;
      } catch (const NumericalError&) {
      }
    }
    if (!evaluated) {
      s.a = a;
      s.b = b;
      s.c = c;
      s.Q = Q;
      s.exists = true;
      s.jacobian_J = 3.0 - tr;
      s.amplitude_phi = std::numeric_limits<double>::quiet_NaN();
      s.front_boundary = s.jacobian_J < 4e-8;
      s.in_chart = false;
    }
    s.roots_found = 1;
    out.push_back(s);
    return out;
  }

  std::vector<Vec> starts{a, b, c, (a + b + c) / 3.0};
  std::vector<Vec> roots;
  for (const auto& s0 : starts) {
    auto Q = newton_fixed_point(m, a, b, c, s0, opt);
    if (Q && distinct(roots, *Q, opt.dedup)) roots.push_back(*Q);
  }
  for (const auto& Q : roots) {
    try {
      out.push_back(evaluate_solution(m, a, b, c, Q, opt.geodesic));
    } catch (const NumericalError&) {
    }
  }
  for (auto& s : out) s.roots_found = static_cast<int>(out.size());
  return out;
}

TripleReflectionSolution triple_fixed_point(const ManifoldModel& m, const Vec& a, const Vec& b,
                                            const Vec& c, const TripleOptions& opt) {
  auto all = triple_fixed_points(m, a, b, c, opt);
  if (all.empty()) {
    TripleReflectionSolution s;
    s.a = a;
    s.b = b;
    s.c = c;
    return s;
  }
  return all.front();
}

// ---------------------------------------------------------------- membrane phase

double membrane_phase_algebraic(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& y,
                                const PhasePoint& z, const TripleReflectionSolution& sol,
                                const FluxOptions& fopt) {
  if (!sol.exists) throw ModelError("membrane_phase: no triangle");
  const GeodesicOptions& g = fopt.geodesic;
  const Vec& Q = sol.Q;
  Vec Q1 = reflect(m, x.q, Q, g);
  Vec Q2 = reflect(m, y.q, Q1, g);
  double S = 2.0 * (x.p.dot(log_map(m, x.q, Q, g)) + y.p.dot(log_map(m, y.q, Q1, g)) +
                    z.p.dot(log_map(m, z.q, Q2, g)));
  if (!m.field_is_zero())
    S += phi(m, x.q, Q, fopt) + phi(m, y.q, Q1, fopt) + phi(m, z.q, Q2, fopt);
  return S;
}

ReflectiveLift reflective_lift(const ManifoldModel& m, const PhasePoint& mid, const Vec& v,
                               const std::vector<double>& times, const ReflectionOptions& opt) {
  ReflectiveLift L;
  L.mid = mid;
  L.v = v;
  auto pos = geodesic_ray(m, mid.q, v, times, opt.geodesic);
  auto neg = geodesic_ray(m, mid.q, -v, times, opt.geodesic);
  auto push = [&](double t, const Vec& q, const Vec& qdot) {
    ReflectionData d = reflection_data(m, mid.q, q, opt);
    Vec Ao = radial_potential(m, m.base_point, q, opt.potential_nodes, opt.geodesic);
    Vec p = d.dV.transpose() * mid.p - Ao + 0.5 * d.dPhi();
    L.t.push_back(t);
    L.points.push_back({q, p});
    L.velocity.push_back(qdot);
    L.potential.push_back(Ao);
  };
  for (std::size_t k = 0; k < times.size(); ++k) {
    push(times[k], pos[k].point, pos[k].velocity);
    push(-times[k], neg[k].point, -neg[k].velocity);
  }
  return L;
}

double reflective_residual(const ManifoldModel& m, const ReflectiveLift& lift,
                           const ReflectionOptions& opt) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < lift.points.size(); k += 2) {
    PhasePoint s = sigma(m, lift.mid, lift.points[k], opt);
    const PhasePoint& r = lift.points[k + 1];
    worst = std::max({worst, (s.q - r.q).norm(), (s.p - r.p).norm()});
  }
  return worst;
}

MembranePhase membrane_phase(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& y,
                             const PhasePoint& z, const TripleReflectionSolution& sol,
                             const MembraneOptions& opt) {
  MembranePhase out;
  out.algebraic = membrane_phase_algebraic(m, x, y, z, sol, opt.flux);
  const GeodesicOptions& g = opt.reflection.geodesic;
  const Vec& Q = sol.Q;
  Vec Q1 = reflect(m, x.q, Q, g);
  Vec Q2 = reflect(m, y.q, Q1, g);
  // Side through each midpoint, parametrised by t in [-1, 1] and ending at the listed corner.
  const PhasePoint* mids[3] = {&x, &y, &z};
  const Vec ends[3] = {Q, Q1, Q2};
  // Gauss-Legendre on [0, 1] folded to [-1, 1]: nodes +-t with weights w (sum 2 over [-1, 1]).
  const GaussRule& gr = gauss_legendre01(opt.nodes);
  std::vector<double> times;
  std::vector<double> weights;
  for (int k = 0; k < opt.nodes; ++k) {
    times.push_back(gr.x[k]);
    weights.push_back(gr.w[k]);
  }
  std::vector<std::size_t> order(times.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return times[i] < times[j]; });
  std::vector<double> ts, ws;
  for (auto k : order) {
    ts.push_back(times[k]);
    ws.push_back(weights[k]);
  }
  double S = 0.0;
  for (int side = 0; side < 3; ++side) {
    Vec v = log_map(m, mids[side]->q, ends[side], g);
    ReflectiveLift L = reflective_lift(m, *mids[side], v, ts, opt.reflection);
    for (std::size_t k = 0; k < L.points.size(); ++k)
      S += ws[k / 2] * (L.points[k].p + L.potential[k]).dot(L.velocity[k]);
  }
  out.geometric = S;
  return out;
}

// ---------------------------------------------------------------- the kernel

StarKernelSample star_kernel(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& y,
                             const PhasePoint& z, double hbar, const TripleOptions& topt,
                             const FluxOptions& fopt) {
  const int n = m.dim;
  StarKernelSample k;
  k.x = x;
  k.y = y;
  k.z = z;
  auto sols = triple_fixed_points(m, x.q, y.q, z.q, topt);
  k.exists = !sols.empty();
  k.multiple_roots = sols.size() > 1;
  if (!k.exists) return k;
  if (k.multiple_roots && !topt.sum_multiple) {
    k.contributing_solutions = sols;
    return k;
  }
  const double pref = std::pow(kPi * hbar, -2.0 * n);
  for (const auto& s : sols) {
    if (s.front_boundary || !s.in_chart) {
      k.boundary_band = true;
      continue;
    }
    double S = membrane_phase_algebraic(m, x, y, z, s, fopt);
    k.phase_S = S;
    k.value += pref * std::exp(I * S / hbar) * s.amplitude_phi / s.jacobian_J;
    k.contributing_solutions.push_back(s);
  }
  if (k.boundary_band) k.value = 0.0;
  return k;
}

std::string to_string(FrontClass c) {
  switch (c) {
    case FrontClass::inside:
      return "inside";
    case FrontClass::outside:
      return "outside";
    case FrontClass::boundary:
      return "boundary";
  }
  return "?";
}

double FrontMap::boundary_fraction() const {
  if (cls.empty()) return 0.0;
  std::size_t k = 0;
  for (auto c : cls) k += c == FrontClass::boundary;
  return static_cast<double>(k) / cls.size();
}

FrontMap front_map(const ManifoldModel& m, const Vec& y, const Vec& z, const Grid& scan,
                   const TripleOptions& opt) {
  FrontMap f;
  f.y = y;
  f.z = z;
  f.grid = scan;
  const std::size_t N = scan.size();
  f.cls.resize(N);
  f.J.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    Vec x = scan.point(i);
    TripleReflectionSolution s;
    try {
      s = triple_fixed_point(m, x, y, z, opt);
    } catch (const NumericalError&) {
      s.exists = false;
    }
    f.J[i] = s.exists ? s.jacobian_J : 0.0;
    f.cls[i] = !s.exists ? FrontClass::outside
                         : (s.front_boundary ? FrontClass::boundary : FrontClass::inside);
  }
  return f;
}

void write_csv(std::ostream& os, const FrontMap& f) {
  os << "x1,x2,class,J\n";
  for (std::size_t i = 0; i < f.cls.size(); ++i) {
    Vec x = f.grid.point(i);
    os << x[0] << ',' << (x.size() > 1 ? x[1] : 0.0) << ',' << to_string(f.cls[i]) << ','
       << f.J[i] << '\n';
  }
}

// ---------------------------------------------------------------- convolution

double k_modulus(const ManifoldModel& m, const Vec& a, const Vec& b, const GeodesicOptions& g) {
  if ((a - b).norm() == 0.0) return 1.0;
  Midpoint mp = midpoint(m, a, b, g);
  DensityPack d = densities(m, mp.c, a, g);
  return std::sqrt(d.j * d.e_at_a * d.e_at_b);
}

cplx cocycle(const ManifoldModel& m, const Vec& a, const Vec& mid, const Vec& b, double hbar,
             const FluxOptions& fopt) {
  const GeodesicOptions& g = fopt.geodesic;
  double mod = k_modulus(m, a, b, g) / (k_modulus(m, a, mid, g) * k_modulus(m, mid, b, g));
  double ph = m.field_is_zero() ? 0.0 : flux(m, a, b, mid, fopt);
  return mod * std::exp(I * ph / hbar);
}

cplx cocycle_from_cochain(const ManifoldModel& m, const Vec& a, const Vec& mid, const Vec& b,
                          double hbar, const FluxOptions& fopt) {
  return k_cochain(m, a, b, hbar, fopt) /
         (k_cochain(m, a, mid, hbar, fopt) * k_cochain(m, mid, b, hbar, fopt));
}

double cocycle_identity_residual(const ManifoldModel& m, const Vec& p0, const Vec& p1,
                                 const Vec& p2, const Vec& p3, double hbar,
                                 const FluxOptions& fopt) {
  // n = (p0, p1), m = (p1, p2), l = (p2, p3).
  cplx lhs = cocycle(m, p0, p1, p3, hbar, fopt) * cocycle(m, p1, p2, p3, hbar, fopt);
  cplx rhs = cocycle(m, p0, p2, p3, hbar, fopt) * cocycle(m, p0, p1, p2, hbar, fopt);
  return std::abs(lhs - rhs);
}

cplx convolve_at(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
                 const Vec& q, const Vec& u, const ConvolutionOptions& opt) {
  const int n = m.dim;
  const GeodesicOptions& go = opt.flux.geodesic;
  const double hbar = f.hbar;
  Vec a, b;
  try {
    a = exp_point(m, q, 0.5 * u, go);
    b = exp_point(m, q, -0.5 * u, go);
  } catch (const NumericalError&) {
    return 0.0;  // far tail of the u-grid: the symbols are negligible there
  }
  const double kab = u.norm() == 0.0 ? 1.0 : k_modulus(m, a, b, go);
  const double sf = sigma_of(f), sg = sigma_of(g);
  const double s2 = sf * sf + sg * sg;
  Vec centre = (a * sg * sg + b * sf * sf) / s2;
  const double seff = sf * sg / std::sqrt(s2);
  CubeRule rule = cube_rule(n, opt.m_span * seff, opt.m_nodes);
  const bool field = !m.field_is_zero();
  cplx acc = 0.0;
  for (const auto& off : rule.offsets) {
    Vec mm = centre + off;
    if (!m.in_chart(mm)) continue;
    Midpoint m1, m2;
    try {
      m1 = midpoint(m, a, mm, go);
      m2 = midpoint(m, mm, b, go);
    } catch (const NumericalError&) {
      continue;
    }
    cplx fv = f.f(m1.c, m1.u);
    if (fv == 0.0) continue;
    cplx gv = g.f(m2.c, m2.u);
    if (gv == 0.0) continue;
    DensityPack d1 = densities(m, m1.c, a, go);
    DensityPack d2 = densities(m, m2.c, mm, go);
    double mod = kab / std::sqrt(d1.j * d1.e_at_a * d1.e_at_b * d2.j * d2.e_at_a * d2.e_at_b);
    cplx C = mod;
    if (field) C *= std::exp(I * flux(m, a, b, mm, opt.flux) / hbar);
    acc += C * fv * gv * m.density(mm);
  }
  return acc * rule.weight;
}

FourierSymbol groupoid_convolve(const ManifoldModel& m, const FourierSymbol& f,
                                const FourierSymbol& g, const ConvolutionOptions& opt) {
  if (std::abs(f.hbar - g.hbar) > 1e-15) throw ModelError("groupoid_convolve: hbar mismatch");
  FourierSymbol h;
  h.hbar = f.hbar;
  h.support_radius = std::hypot(f.support_radius, g.support_radius);
  h.f = [m, f, g, opt](const Vec& q, const Vec& u) { return convolve_at(m, f, g, q, u, opt); };
  return h;
}

FourierSymbol conj_symbol(const FourierSymbol& f) {
  FourierSymbol h = f;
  h.f = [ff = f.f](const Vec& q, const Vec& u) { return std::conj(ff(q, -u)); };
  return h;
}

cplx symbol_value(const ManifoldModel& m, const FourierSymbol& f, const PhasePoint& x,
                  int u_nodes, double u_span) {
  CubeRule rule = cube_rule(m.dim, u_span * sigma_of(f), u_nodes);
  cplx acc = 0.0;
  for (const auto& u : rule.offsets) acc += std::exp(-I * u.dot(x.p) / f.hbar) * f.f(x.q, u);
  return m.density(x.q) * rule.weight * acc;
}

FiberRule fiber_rule(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
                     const Vec& q, const ConvolutionOptions& opt) {
  const double su = std::hypot(sigma_of(f), sigma_of(g));
  CubeRule rule = cube_rule(m.dim, opt.u_span * su, opt.u_nodes);
  return {std::move(rule.offsets), m.density(q) * rule.weight};
}

std::vector<cplx> star_fiber(const ManifoldModel& m, const FourierSymbol& f,
                             const FourierSymbol& g, const Vec& q, const std::vector<Vec>& ps,
                             const ConvolutionOptions& opt) {
  const double hbar = f.hbar;
  FiberRule rule = fiber_rule(m, f, g, q, opt);
  std::vector<cplx> out(ps.size(), 0.0);
  for (const auto& u : rule.u) {
    cplx h = convolve_at(m, f, g, q, u, opt);
    for (std::size_t k = 0; k < ps.size(); ++k) out[k] += std::exp(-I * u.dot(ps[k]) / hbar) * h;
  }
  for (auto& v : out) v *= rule.weight;
  return out;
}

cplx star(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
          const PhasePoint& x, const ConvolutionOptions& opt) {
  return star_fiber(m, f, g, x.q, {x.p}, opt).front();
}

KernelRouteResult star_via_kernel(const ManifoldModel& m, const FourierSymbol& f,
                                  const FourierSymbol& g, const PhasePoint& x,
                                  const KernelRouteOptions& opt) {
  const int n = m.dim;
  const double hbar = f.hbar;
  const GeodesicOptions& go = opt.triple.geodesic;
  // f~(b, 2 V_b(Q')) localises c within sigma_f / 2 of x, g~ localises b within sigma_g / 2.
  CubeRule rb = cube_rule(n, opt.span * 0.5 * sigma_of(g), opt.nodes);
  CubeRule rc = cube_rule(n, opt.span * 0.5 * sigma_of(f), opt.nodes);
  KernelRouteResult r;
  cplx acc = 0.0;
  const bool field = !m.field_is_zero();
  for (const auto& ob : rb.offsets) {
    Vec b = x.q + ob;
    if (!m.in_chart(b)) continue;
    for (const auto& oc : rc.offsets) {
      Vec c = x.q + oc;
      if (!m.in_chart(c)) continue;
      TripleReflectionSolution s;
      try {
        s = triple_fixed_point(m, x.q, b, c, opt.triple);
      } catch (const NumericalError&) {
        s.exists = false;
      }
      if (!s.exists) {
        ++r.missing;
        continue;
      }
      if (s.front_boundary || !s.in_chart) {
        ++r.boundary;
        continue;
      }
      Vec Q1 = reflect(m, x.q, s.Q, go);
      Vec Q2 = reflect(m, b, Q1, go);
      cplx fv = f.f(b, 2.0 * log_map(m, b, Q1, go));
      if (fv == 0.0) continue;
      cplx gv = g.f(c, 2.0 * log_map(m, c, Q2, go));
      if (gv == 0.0) continue;
      double S = 2.0 * x.p.dot(log_map(m, x.q, s.Q, go));
      if (field) S += phi(m, x.q, s.Q, opt.flux) + phi(m, b, Q1, opt.flux) + phi(m, c, Q2, opt.flux);
      acc += std::exp(I * S / hbar) * s.amplitude_phi / s.jacobian_J * m.density(b) *
             m.density(c) * fv * gv;
    }
  }
  r.value = std::pow(2.0, 2 * n) * rb.weight * rc.weight * acc;
  return r;
}

cplx trace_of_product(const ManifoldModel& m, const FourierSymbol& f, const FourierSymbol& g,
                      const Vec& lo, const Vec& hi, int q_nodes, const ConvolutionOptions& opt) {
  const int n = m.dim;
  FourierSymbol gb = conj_symbol(g);
  Vec centre = 0.5 * (lo + hi);
  Vec half = 0.5 * (hi - lo);
  cplx acc = 0.0;
  CubeRule unit = cube_rule(n, 1.0, q_nodes);
  const double w = unit.weight * half.prod();
  Vec zero = Vec::Zero(n);
  for (const auto& o : unit.offsets) {
    Vec q = centre + half.cwiseProduct(o);
    acc += m.density(q) * convolve_at(m, f, gb, q, zero, opt);
  }
  return acc * w;
}

// ---------------------------------------------------------------- Gaussian symbols

GaussianSymbol GaussianSymbol::centered(const PMat& A, const PVec& x0, const PVec& k, cplx amp) {
  GaussianSymbol s;
  s.n = static_cast<int>(A.rows()) / 2;
  s.A = A;
  s.b = (A * x0).cast<cplx>() + I * k.cast<cplx>();
  s.c0 = amp * std::exp(-0.5 * x0.dot(A * x0) - I * k.dot(x0));
  s.c1 = CPVec::Zero(2 * s.n);
  return s;
}

cplx GaussianSymbol::operator()(const PhasePoint& x) const {
  PVec X = x.stacked();
  CPVec Xc = X.cast<cplx>();
  cplx e = -0.5 * X.dot(A * X) + (b.transpose() * Xc)(0);
  cplx pre = c0 + (c1.transpose() * Xc)(0);
  return pre * std::exp(e);
}

CPVec GaussianSymbol::gradient(const PhasePoint& x) const {
  PVec X = x.stacked();
  CPVec Xc = X.cast<cplx>();
  cplx E = std::exp(-0.5 * X.dot(A * X) + (b.transpose() * Xc)(0));
  cplx pre = c0 + (c1.transpose() * Xc)(0);
  CPVec L = b - (A * X).cast<cplx>();
  return E * (c1 + pre * L);
}

CPMat GaussianSymbol::hessian(const PhasePoint& x) const {
  PVec X = x.stacked();
  CPVec Xc = X.cast<cplx>();
  cplx E = std::exp(-0.5 * X.dot(A * X) + (b.transpose() * Xc)(0));
  cplx pre = c0 + (c1.transpose() * Xc)(0);
  CPVec L = b - (A * X).cast<cplx>();
  CPMat H = pre * (L * L.transpose() - A.cast<cplx>()) + c1 * L.transpose() + L * c1.transpose();
  return E * H;
}

GaussianSymbol GaussianSymbol::conj() const {
  GaussianSymbol s = *this;
  s.b = b.conjugate();
  s.c0 = std::conj(c0);
  s.c1 = c1.conjugate();
  return s;
}

double GaussianSymbol::momentum_scale() const {
  // The u-image is Gaussian with covariance hbar^2 P, P the momentum block of A.
  Eigen::SelfAdjointEigenSolver<PMat> es(A.bottomRightCorner(n, n));
  return std::sqrt(es.eigenvalues().maxCoeff());
}

FourierSymbol GaussianSymbol::fourier(const ManifoldModel& m, double hbar) const {
  if (m.dim != n) throw ModelError("GaussianSymbol: dimension mismatch");
  FourierSymbol f;
  f.hbar = hbar;
  f.support_radius = kSupportSigmas * hbar * momentum_scale();
  const PMat P = A.bottomRightCorner(n, n);
  const PMat Pinv = P.inverse();
  const double norm = std::pow(2.0 * kPi * hbar, -n) * std::pow(2.0 * kPi, 0.5 * n) /
                      std::sqrt(P.determinant());
  f.f = [m, s = *this, Pinv, norm, hbar](const Vec& q, const Vec& u) -> cplx {
    const int n = s.n;
    CPVec qc = q.cast<cplx>();
    CPVec v = s.b.tail(n) - (s.A.bottomLeftCorner(n, n) * q).cast<cplx>();
    CPVec w = v + I * u.cast<cplx>() / hbar;
    cplx e = -0.5 * q.dot(s.A.topLeftCorner(n, n) * q) + (s.b.head(n).transpose() * qc)(0) +
             0.5 * (w.transpose() * Pinv.cast<cplx>() * w)(0);
    cplx pre = s.c0 + (s.c1.head(n).transpose() * qc)(0) +
               (s.c1.tail(n).transpose() * (Pinv.cast<cplx>() * w))(0);
    return norm / m.density(q) * pre * std::exp(e);
  };
  return f;
}

GaussianSymbol random_gaussian(std::mt19937_64& rng, int n, const PVec& x0, double width_lo,
                               double width_hi, double k_max) {
  std::uniform_real_distribution<double> uw(width_lo, width_hi), uk(-k_max, k_max);
  std::normal_distribution<double> nd;
  const int N = 2 * n;
  PMat G(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) G(i, j) = nd(rng);
  Eigen::HouseholderQR<PMat> qr(G);
  PMat R = qr.householderQ();
  PVec d(N), k(N);
  for (int i = 0; i < N; ++i) {
    double w = uw(rng);
    d[i] = 1.0 / (w * w);
    k[i] = uk(rng);
  }
  PMat A = R * d.asDiagonal() * R.transpose();
  A = 0.5 * (A + A.transpose()).eval();
  return GaussianSymbol::centered(A, x0, k, cplx(1.0, 0.0));
}

cplx moyal_gaussian(const GaussianSymbol& f, const GaussianSymbol& g, const PhasePoint& x,
                    const PMat& omega, double hbar) {
  if (f.c1.cwiseAbs().maxCoeff() > 0.0 || g.c1.cwiseAbs().maxCoeff() > 0.0)
    throw ModelError("moyal_gaussian: linear prefactors are not supported");
  const int N = 2 * f.n;
  using BigMat = Eigen::MatrixXd;
  using BigCMat = Eigen::MatrixXcd;
  const PVec X = x.stacked();
  const PMat W = -omega.transpose();
  BigMat P = BigMat::Zero(2 * N, 2 * N), K = BigMat::Zero(2 * N, 2 * N);
  P.topLeftCorner(N, N) = f.A;
  P.bottomRightCorner(N, N) = g.A;
  K.topRightCorner(N, N) = -(2.0 / hbar) * W;
  K.bottomLeftCorner(N, N) = -(2.0 / hbar) * W.transpose();
  BigCMat M = P.cast<cplx>() + I * K.cast<cplx>();
  Eigen::VectorXcd beta(2 * N);
  beta.head(N) = f.b - (f.A * X).cast<cplx>();
  beta.tail(N) = g.b - (g.A * X).cast<cplx>();
  // det(M)^{-1/2} on the branch continuous from K = 0: det(P)^{-1/2} prod (1 + i lambda)^{-1/2}.
  Eigen::LLT<BigMat> llt(P);
  if (llt.info() != Eigen::Success) throw ModelError("moyal_gaussian: symbols must decay in x");
  BigMat Li = llt.matrixL().solve(BigMat::Identity(2 * N, 2 * N));
  Eigen::SelfAdjointEigenSolver<BigMat> es(Li * K * Li.transpose());
  cplx detfac = 1.0 / std::sqrt(P.determinant());
  for (int i = 0; i < 2 * N; ++i) detfac /= std::sqrt(cplx(1.0, es.eigenvalues()[i]));
  cplx quad = 0.5 * (beta.transpose() * M.partialPivLu().solve(beta))(0);
  const double pref = std::pow(2.0 / hbar, N);
  return pref * f(x) * g(x) * detfac * std::exp(quad);
}

cplx moyal_flat(const GaussianSymbol& f, const GaussianSymbol& g, const PhasePoint& x, double hbar) {
  const int n = f.n;
  PMat om = PMat::Zero(2 * n, 2 * n);
  om.topRightCorner(n, n) = Mat::Identity(n, n);
  om.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return moyal_gaussian(f, g, x, om, hbar);
}

cplx moyal_magnetic(const GaussianSymbol& f, const GaussianSymbol& g, const PhasePoint& x,
                    const Mat& F, double hbar) {
  const int n = f.n;
  PMat om = PMat::Zero(2 * n, 2 * n);
  om.topLeftCorner(n, n) = F;
  om.topRightCorner(n, n) = Mat::Identity(n, n);
  om.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return moyal_gaussian(f, g, x, om, hbar);
}

// ---------------------------------------------------------------- hbar expansion

cplx poisson_bracket(const ManifoldModel& m, const GaussianSymbol& f, const GaussianSymbol& g,
                     const PhasePoint& x) {
  PMat Psi = poisson_tensor(m, x.q).psi;
  return (f.gradient(x).transpose() * Psi.cast<cplx>() * g.gradient(x))(0);
}

cplx second_order_bracket(const ManifoldModel& m, const GaussianSymbol& f, const GaussianSymbol& g,
                          const PhasePoint& x, double ricci_coefficient) {
  const PhaseConnection conn = connection_explicit(m, x);
  const PMat Psi = poisson_tensor(m, x.q).psi;
  auto cov_hessian = [&](const GaussianSymbol& s) {
    CPVec d = s.gradient(x);
    CPMat H = s.hessian(x);
    PMat re = covariant_hessian(conn, d.real(), H.real());
    PMat im = covariant_hessian(conn, d.imag(), H.imag());
    return CPMat(re.cast<cplx>() + I * im.cast<cplx>());
  };
  CPMat Hf = cov_hessian(f), Hg = cov_hessian(g);
  CPMat PHP = Psi.cast<cplx>() * Hg * Psi.transpose().cast<cplx>();
  cplx t1 = Hf.cwiseProduct(PHP).sum();
  P2 ric = ricci_expected(m, x.q);
  const int N = 2 * m.dim;
  PMat R(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) R(i, j) = ric(i, j);
  PMat B = ricci_coefficient * Psi * R * Psi;
  cplx t2 = (f.gradient(x).transpose() * B.cast<cplx>() * g.gradient(x))(0);
  return t1 + t2;
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& r) {
  const std::size_t N = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < N; ++k) {
    double lx = std::log(h[k]), ly = std::log(std::max(r[k], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

ExpansionReport expansion_check(const ManifoldModel& m, const GaussianSymbol& f,
                                const GaussianSymbol& g, const PhasePoint& x,
                                const ExpansionOptions& opt) {
  ExpansionReport r;
  r.x = x;
  r.hbar_sweep = opt.sweep;
  r.ricci_coefficient = opt.ricci_coefficient;
  const cplx fg = f(x) * g(x);
  r.poisson = poisson_bracket(m, f, g, x);
  r.second = second_order_bracket(m, f, g, x, opt.ricci_coefficient);
  for (double h : opt.sweep) {
    cplx ex = star(m, f.fourier(m, h), g.fourier(m, h), x, opt.conv);
    cplx t0 = fg;
    cplx t1 = t0 - 0.5 * I * h * r.poisson;
    cplx t2 = t1 - h * h / 8.0 * r.second;
    r.exact.push_back(ex);
    r.order0.push_back(t0);
    r.order1.push_back(t1);
    r.order2.push_back(t2);
    r.res0.push_back(std::abs(ex - t0));
    r.res1.push_back(std::abs(ex - t1));
    r.res2.push_back(std::abs(ex - t2));
  }
  r.o0 = loglog_slope(r.hbar_sweep, r.res0);
  r.o1 = loglog_slope(r.hbar_sweep, r.res1);
  r.o2 = loglog_slope(r.hbar_sweep, r.res2);
  r.floor = *std::min_element(r.res2.begin(), r.res2.end());
  return r;
}

std::string ExpansionReport::to_json() const {
  using nlohmann::json;
  auto cj = [](const std::vector<cplx>& v) {
    json a = json::array();
    for (auto z : v) a.push_back({z.real(), z.imag()});
    return a;
  };
  json j;
  j["x"] = {{"q", std::vector<double>(x.q.data(), x.q.data() + x.q.size())},
            {"p", std::vector<double>(x.p.data(), x.p.data() + x.p.size())}};
  j["hbar"] = hbar_sweep;
  j["exact"] = cj(exact);
  j["order0"] = cj(order0);
  j["order1"] = cj(order1);
  j["order2"] = cj(order2);
  j["residual0"] = res0;
  j["residual1"] = res1;
  j["residual2"] = res2;
  j["fitted_orders"] = {o0, o1, o2};
  j["poisson_bracket"] = {poisson.real(), poisson.imag()};
  j["second_order_bracket"] = {second.real(), second.imag()};
  j["residual_floor"] = floor;
  j["ricci_coefficient"] = ricci_coefficient;
  return j.dump(2);
}

void ExpansionReport::write_csv(std::ostream& os) const {
  os << "hbar,exact_re,exact_im,res0,res1,res2\n";
  os.precision(17);
  for (std::size_t k = 0; k < hbar_sweep.size(); ++k)
    os << hbar_sweep[k] << ',' << exact[k].real() << ',' << exact[k].imag() << ',' << res0[k]
       << ',' << res1[k] << ',' << res2[k] << '\n';
}

}  // namespace mgq
