#include "mgq/connection.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>

namespace mgq {

namespace {

// 4th-order central first derivative of a vector-valued function along e.
template <class F>
auto d1(const F& f, const PVec& x, int k, double h) {
  PVec e = PVec::Zero(x.size());
  e[k] = h;
  return (-f(x + 2 * e) + 8.0 * f(x + e) - 8.0 * f(x - e) + f(x - 2 * e)) / (12.0 * h);
}

PhasePoint shifted(const PhasePoint& x, int k, double h) {
  PVec y = x.stacked();
  y[k] += h;
  return PhasePoint::from_stacked(y);
}

Mat inverse_metric(const ManifoldModel& m, const Vec& q) {
  if (!m.has_metric()) throw ModelError("model '" + m.name + "' has no metric");
  return m.metric(q).inverse();
}

}  // namespace

// ---------------------------------------------------------------- connection

PhaseConnection connection_explicit(const ManifoldModel& m, const PhasePoint& x) {
  const int n = m.dim;
  T3 G;
  T4 dG;
  m.fields->christoffel_with_d1(x.q, G, dG);
  PhaseConnection c;
  c.n = n;
  c.x = x;
  c.B = T4(n);
  c.C = coupling_from(nabla_faraday(G, m.faraday(x.q), m.fields->faraday_d1(x.q)));
  auto term = [&](int mm, int j, int k, int l) {
    double v = -dG(j, mm, k, l);
    for (int s = 0; s < n; ++s) v += 2.0 * G(mm, j, s) * G(s, k, l);
    return v;
  };
  for (int mm = 0; mm < n; ++mm)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          c.B(mm, j, k, l) = (term(mm, j, k, l) + term(mm, k, l, j) + term(mm, l, j, k)) / 3.0;

  c.gamma = P3(2 * n);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        c.gamma(c.qi(a), c.qi(j), c.qi(k)) = G(a, j, k);
        c.gamma(c.pi(a), c.qi(j), c.pi(k)) = -G(k, j, a);
        c.gamma(c.pi(a), c.pi(k), c.qi(j)) = -G(k, j, a);
        double v = c.C(a, j, k);
        for (int l = 0; l < n; ++l) v += x.p[l] * c.B(l, a, j, k);
        c.gamma(c.pi(a), c.qi(j), c.qi(k)) = v;
      }
  return c;
}

ReflectionOptions smooth_reflection_options(const ManifoldModel& m) {
  ReflectionOptions o;
  if (m.geodesic_kind == GeodesicKind::ode) o.geodesic.fixed_steps = 32;
  return o;
}

PhaseConnection connection_from_sigma(const ManifoldModel& m, const PhasePoint& x, double h,
                                      const ReflectionOptions& opt) {
  if (!(h > 0.0)) throw ModelError("connection_from_sigma: step must be positive");
  const int n = m.dim, N = 2 * n;
  const PVec x0 = x.stacked();
  auto s = [&](const PVec& y) { return sigma(m, x, PhasePoint::from_stacked(y), opt).stacked(); };
  PhaseConnection c;
  c.n = n;
  c.x = x;
  c.gamma = P3(N);
  c.B = T4(n);
  c.C = T3(n);
  const PVec f0 = s(x0);
  auto store = [&](int b, int d, const PVec& second) {
    for (int a = 0; a < N; ++a) {
      c.gamma(a, b, d) = -0.5 * second[a];
      c.gamma(a, d, b) = -0.5 * second[a];
    }
  };
  for (int b = 0; b < N; ++b) {
    PVec e = PVec::Zero(N);
    e[b] = h;
    store(b, b, (s(x0 + e) - 2.0 * f0 + s(x0 - e)) / (h * h));
    for (int d = b + 1; d < N; ++d) {
      PVec f = PVec::Zero(N);
      f[d] = h;
      store(b, d, (s(x0 + e + f) - s(x0 + e - f) - s(x0 - e + f) + s(x0 - e - f)) / (4 * h * h));
    }
  }
  return c;
}

double connection_distance(const PhaseConnection& a, const PhaseConnection& b) {
  return (a.gamma - b.gamma).max_abs();
}

RouteReport connection_route_check(const ManifoldModel& m, const PhasePoint& x,
                                   const std::vector<double>& steps, double noise_floor) {
  RouteReport r;
  r.steps = steps;
  const PhaseConnection ex = connection_explicit(m, x);
  const ReflectionOptions opt = smooth_reflection_options(m);
  double worst = 0.0;
  for (double h : steps) {
    r.errors.push_back(connection_distance(connection_from_sigma(m, x, h, opt), ex));
    worst = std::max(worst, r.errors.back());
  }
  r.exact = worst < noise_floor;
  if (!r.exact && steps.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(steps.size());
    for (size_t i = 0; i < steps.size(); ++i) {
      double lx = std::log(steps[i]), ly = std::log(std::max(r.errors[i], 1e-300));
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    r.order = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  return r;
}

// ---------------------------------------------------------------- curvature

P4 curvature_fd(const std::function<PhaseConnection(const PhasePoint&)>& conn, const PhasePoint& x,
                double h) {
  const PhaseConnection c0 = conn(x);
  const int N = 2 * c0.n;
  // dG(e)(a, b, c) = d_e Gamma^a_bc
  std::vector<P3> dG(N, P3(N));
  for (int e = 0; e < N; ++e) {
    P3 g2 = conn(shifted(x, e, 2 * h)).gamma, g1 = conn(shifted(x, e, h)).gamma;
    P3 m1 = conn(shifted(x, e, -h)).gamma, m2 = conn(shifted(x, e, -2 * h)).gamma;
    dG[e] = (1.0 / (12.0 * h)) * ((8.0 * (g1 - m1)) - (g2 - m2));
  }
  const P3& G = c0.gamma;
  P4 R(N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        for (int d = 0; d < N; ++d) {
          double v = dG[c](a, b, d) - dG[d](a, b, c);
          for (int e = 0; e < N; ++e) v += G(a, c, e) * G(e, b, d) - G(a, d, e) * G(e, b, c);
          R(a, b, c, d) = v;
        }
  return R;
}

P2 ricci_from(const P4& R) {
  const int N = R.dim();
  P2 out(N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double v = 0.0;
      for (int k = 0; k < N; ++k) v += R(k, i, k, j);
      out(i, j) = v;
    }
  return out;
}

P2 ricci_expected(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  BaseCurvature bc = curvature_at(m, q);
  P2 out(2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = 2.0 / 3.0 * bc.ricci_sym(i, j);
  return out;
}

T4 magnetic_curvature(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  const T4 R = curvature_at(m, q).riemann;
  const T4 N2 = nabla2_faraday(m, q);  // N2(j, k, l, m) = nabla_m nabla_l F_jk
  const T2 F = m.faraday(q);
  T4 M(n);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = N2(j, k, s, i);
          for (int l = 0; l < n; ++l) {
            v += 2.0 * R(l, i, j, k) * F(l, s);
            v += R(l, s, i, j) * F(l, k) + R(l, s, k, i) * F(l, j) - R(l, s, j, k) * F(l, i);
          }
          M(s, i, j, k) = v / 3.0;
        }
  return M;
}

PhaseCurvature curvature_phase(const ManifoldModel& m, const PhasePoint& x, double h) {
  const int n = m.dim, N = 2 * n;
  PhaseCurvature pc;
  pc.n = n;
  pc.x = x;
  const Vec& q = x.q;
  T3 G;
  T4 dG;
  m.fields->christoffel_with_d1(q, G, dG);
  const T4 Rb = riemann_from(G, dG);
  const T5 NR = nabla_riemann(m, q);  // NR(s, i, j, k, m) = nabla_m R^s_ijk
  pc.M = magnetic_curvature(m, q);

  pc.R = P4(N);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          pc.R(pc.qi(s), pc.qi(i), pc.qi(j), pc.qi(k)) = Rb(s, i, j, k);
          // R^{p_s}_{p_j q^i q^k} = R^j_ski
          pc.R(pc.pi(s), pc.pi(j), pc.qi(i), pc.qi(k)) = Rb(j, s, k, i);
          double mixed = (Rb(j, s, k, i) + Rb(j, i, k, s)) / 3.0;
          pc.R(pc.pi(s), pc.qi(i), pc.pi(j), pc.qi(k)) = mixed;
          pc.R(pc.pi(s), pc.qi(i), pc.qi(k), pc.pi(j)) = -mixed;
        }
  // p-linear part of R^{p_s}_{q^i q^j q^k}, symmetrized over (i, s).
  auto X = [&](int s, int i, int j, int k) {
    double v = 0.0;
    for (int mm = 0; mm < n; ++mm) {
      double w = NR(mm, i, k, j, s);
      for (int l = 0; l < n; ++l)
        w += 3.0 * G(mm, s, l) * Rb(l, i, j, k) - G(mm, j, l) * Rb(l, i, k, s) + G(mm, k, l) * Rb(l, i, j, s);
      v += x.p[mm] * w;
    }
    return v;
  };
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          pc.R(pc.pi(s), pc.qi(i), pc.qi(j), pc.qi(k)) = (X(s, i, j, k) + X(i, s, j, k)) / 3.0 + pc.M(s, i, j, k);

  pc.R_fd = curvature_fd([&m](const PhasePoint& y) { return connection_explicit(m, y); }, x, h);
  pc.ricci = ricci_from(pc.R);
  pc.ricci_fd = ricci_from(pc.R_fd);
  pc.discrepancy = (pc.R - pc.R_fd).max_abs();
  return pc;
}

// ---------------------------------------------------------------- symplectic structure

PoissonTensor poisson_tensor(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  PoissonTensor t;
  t.omega = omega_matrix(m, q);
  t.psi = PMat::Zero(2 * n, 2 * n);
  t.psi.topRightCorner(n, n) = -Mat::Identity(n, n);
  t.psi.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  t.psi.bottomRightCorner(n, n) = m.faraday_matrix(q);
  return t;
}

double jacobi_identity_residual(const ManifoldModel& m, const PhasePoint& x, double h) {
  const int N = 2 * m.dim;
  const PVec x0 = x.stacked();
  auto psi = [&](const PVec& y) -> PMat { return poisson_tensor(m, y.head(m.dim)).psi; };
  std::vector<PMat> dpsi;
  for (int l = 0; l < N; ++l) dpsi.push_back(d1(psi, x0, l, h));
  const PMat P = psi(x0);
  double worst = 0.0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        double v = 0.0;
        for (int l = 0; l < N; ++l)
          v += P(a, l) * dpsi[l](b, c) + P(b, l) * dpsi[l](c, a) + P(c, l) * dpsi[l](a, b);
        worst = std::max(worst, std::abs(v));
      }
  return worst;
}

// ---------------------------------------------------------------- covariant derivatives

P3 covariant_derivative(const PhaseConnection& conn, const PMat& T, const P3& dT, Valence v) {
  const int N = 2 * conn.n;
  if (T.rows() != N || T.cols() != N || dT.dim() != N)
    throw ModelError("covariant_derivative: tensor does not match the phase-space dimension");
  const P3& G = conn.gamma;
  P3 out(N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        double s = dT(a, b, c);
        for (int e = 0; e < N; ++e) {
          if (v == Valence::covariant)
            s -= G(e, c, a) * T(e, b) + G(e, c, b) * T(a, e);
          else
            s += G(a, c, e) * T(e, b) + G(b, c, e) * T(a, e);
        }
        out(a, b, c) = s;
      }
  return out;
}

P3 covariant_derivative(const PhaseConnection& conn, const PhaseMatrixField& T, Valence v, double h) {
  const int N = 2 * conn.n;
  const PVec x0 = conn.x.stacked();
  auto f = [&](const PVec& y) -> PMat { return T(PhasePoint::from_stacked(y)); };
  P3 dT(N);
  for (int c = 0; c < N; ++c) {
    PMat d = d1(f, x0, c, h);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) dT(a, b, c) = d(a, b);
  }
  return covariant_derivative(conn, f(x0), dT, v);
}

PVec scalar_gradient(const PhaseScalar& f, const PhasePoint& x, double h) {
  const PVec x0 = x.stacked();
  const int N = static_cast<int>(x0.size());
  auto g = [&](const PVec& y) { return f(PhasePoint::from_stacked(y)); };
  PVec out(N);
  for (int k = 0; k < N; ++k) out[k] = d1(g, x0, k, h);
  return out;
}

PMat covariant_hessian(const PhaseConnection& conn, const PVec& df, const PMat& d2f) {
  const int N = 2 * conn.n;
  PMat H = d2f;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) H(a, b) -= conn.gamma(c, a, b) * df[c];
  return H;
}

PMat covariant_hessian(const PhaseConnection& conn, const PhaseScalar& f, double h) {
  const int N = 2 * conn.n;
  const PhasePoint& x = conn.x;
  PMat d2(N, N);
  for (int a = 0; a < N; ++a) {
    // d_a of the gradient, itself a 4th-order stencil: 4th order overall.
    auto grad = [&](const PVec& y) { return scalar_gradient(f, PhasePoint::from_stacked(y), h); };
    d2.col(a) = d1(grad, x.stacked(), a, h);
  }
  d2 = 0.5 * (d2 + d2.transpose()).eval();
  return covariant_hessian(conn, scalar_gradient(f, x, h), d2);
}

P3 omega_derivative(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  const T3 dF = m.fields->faraday_d1(q);
  P3 out(2 * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) out(a, b, c) = dF(c, a, b);
  return out;
}

double nabla_omega_residual(const ManifoldModel& m, const PhasePoint& x) {
  PhaseConnection c = connection_explicit(m, x);
  return covariant_derivative(c, omega_matrix(m, x.q), omega_derivative(m, x.q), Valence::covariant)
      .max_abs();
}

// ---------------------------------------------------------------- Maxwell-type identities

double MaxwellReport::max() const {
  return std::max({duality, cyclic, coupling_curvature, continuity, kappa_exact, kappa_closed});
}

Vec current_covector(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  const Mat gi = inverse_metric(m, q);
  const T3 C = curvature_at(m, q).coupling;
  Vec j = Vec::Zero(n);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) j[s] += 2.0 / 3.0 * C(s, i, k) * gi(i, k);
  return j;
}

Mat kappa_form(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  const Mat gi = inverse_metric(m, q);
  const T4 M = magnetic_curvature(m, q);
  const T4 R = curvature_at(m, q).riemann;
  const T2 F = m.faraday(q);
  // Written with the all-plus cyclic variant Mc = M + (2/3) R^l_sjk F_li; the F R term
  // below cancels that shift, so kappa = 3 g^ik M_iksm.
  Mat K = Mat::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int mm = 0; mm < n; ++mm)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          double v = 3.0 * M(i, k, s, mm);
          for (int l = 0; l < n; ++l) v += 2.0 * R(l, i, s, mm) * F(l, k) + 2.0 * F(i, l) * R(l, k, s, mm);
          K(s, mm) += gi(i, k) * v;
        }
  return K;
}

MaxwellReport maxwell_identities(const ManifoldModel& m, const Vec& q, double h) {
  const int n = m.dim;
  MaxwellReport r;
  const BaseCurvature bc = curvature_at(m, q);
  CouplingReport cr = coupling_identities(bc);
  r.duality = std::max(cr.duality, cr.inverse_duality);
  r.cyclic = std::max(cr.cyclic_coupling, cr.cyclic_nabla);

  // (c) nabla_j C_sik = (1/3)(nabla_j nabla_i F_sk + nabla_j nabla_k F_si).
  const T4 N2 = nabla2_faraday(m, q);
  const T4 M = magnetic_curvature(m, q);
  auto nC = [&](int s, int i, int k, int j) { return (N2(s, k, i, j) + N2(s, i, k, j)) / 3.0; };
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < n; ++s)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r.coupling_curvature =
              std::max(r.coupling_curvature, std::abs(nC(s, i, k, j) - nC(s, i, j, k) - M(s, i, j, k)));

  r.has_metric = m.has_metric();
  if (!r.has_metric) return r;
  const Mat gi = inverse_metric(m, q);
  const T3 G = m.christoffel(q);
  auto dvec = [&](const std::function<Vec(const Vec&)>& f, int l) {
    Vec e = Vec::Zero(n);
    e[l] = h;
    return Vec((-f(q + 2 * e) + 8.0 * f(q + e) - 8.0 * f(q - e) + f(q - 2 * e)) / (12.0 * h));
  };
  auto jf = [&m](const Vec& y) { return current_covector(m, y); };
  const Vec j = jf(q);
  Mat dj(n, n);  // dj(l, s) = d_l j_s
  for (int l = 0; l < n; ++l) dj.row(l) = dvec(jf, l).transpose();
  double cont = 0.0;
  for (int l = 0; l < n; ++l)
    for (int s = 0; s < n; ++s) {
      double v = dj(l, s);
      for (int r2 = 0; r2 < n; ++r2) v -= G(r2, l, s) * j[r2];
      cont += gi(l, s) * v;
    }
  r.continuity = std::abs(cont);
  const Mat K = kappa_form(m, q);
  // kappa = d j' for j' = (9/4) j, i.e. j'_s = (3/2) F_s{ik} g^ik, with (d j')_sm = d_m j'_s - d_s j'_m.
  r.kappa_exact = (K - 2.25 * (dj.transpose() - dj)).cwiseAbs().maxCoeff();
  // d kappa = 0 through the cyclic sum of chart derivatives.
  std::vector<Mat> dK;
  for (int l = 0; l < n; ++l) {
    Mat d = Mat::Zero(n, n);
    for (int c = 0; c < n; ++c) {
      auto col = [&m, c](const Vec& y) { return Vec(kappa_form(m, y).col(c)); };
      d.col(c) = dvec(col, l);
    }
    dK.push_back(d);
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        r.kappa_closed = std::max(r.kappa_closed, std::abs(dK[a](b, c) + dK[b](c, a) + dK[c](a, b)));
  return r;
}

// ---------------------------------------------------------------- JSON

namespace {

nlohmann::json basis_labels(int n) {
  nlohmann::json b = nlohmann::json::array();
  for (int k = 0; k < n; ++k) b.push_back("q" + std::to_string(k + 1));
  for (int k = 0; k < n; ++k) b.push_back("p" + std::to_string(k + 1));
  return b;
}

template <class T>
nlohmann::json nested(const T& t, int rank) {
  const int N = t.dim();
  std::function<nlohmann::json(std::vector<int>&)> rec = [&](std::vector<int>& ix) -> nlohmann::json {
    if (static_cast<int>(ix.size()) == rank) {
      if constexpr (std::is_same_v<T, P2>) return t(ix[0], ix[1]);
      else if constexpr (std::is_same_v<T, P3> || std::is_same_v<T, T3>) return t(ix[0], ix[1], ix[2]);
      else return t(ix[0], ix[1], ix[2], ix[3]);
    }
    nlohmann::json a = nlohmann::json::array();
    for (int k = 0; k < N; ++k) {
      ix.push_back(k);
      a.push_back(rec(ix));
      ix.pop_back();
    }
    return a;
  };
  std::vector<int> ix;
  return rec(ix);
}

nlohmann::json point_json(const PhasePoint& x) {
  return {{"q", std::vector<double>(x.q.data(), x.q.data() + x.q.size())},
          {"p", std::vector<double>(x.p.data(), x.p.data() + x.p.size())}};
}

}  // namespace

std::string to_json(const PhaseConnection& c) {
  nlohmann::json j;
  j["point"] = point_json(c.x);
  j["basis"] = basis_labels(c.n);
  j["index_convention"] = "gamma[a][b][c] = Gamma^a_bc";
  j["gamma"] = nested(c.gamma, 3);
  j["B"] = nested(c.B, 4);
  j["C"] = nested(c.C, 3);
  return j.dump(2);
}

std::string to_json(const PhaseCurvature& c) {
  nlohmann::json j;
  j["point"] = point_json(c.x);
  j["basis"] = basis_labels(c.n);
  j["index_convention"] = "R[a][b][c][d] = R^a_bcd; ricci[i][j] = R^k_ikj";
  j["R"] = nested(c.R, 4);
  j["M"] = nested(c.M, 4);
  j["ricci"] = nested(c.ricci, 2);
  j["discrepancy"] = c.discrepancy;
  return j.dump(2);
}

}  // namespace mgq
