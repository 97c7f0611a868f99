#include "mgq/reflections.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mgq {

namespace {

constexpr cplx I{0.0, 1.0};

Vec potential(const ManifoldModel& m, const Vec& base, const Vec& at, const ReflectionOptions& opt) {
  return radial_potential(m, base, at, opt.potential_nodes, opt.geodesic);
}

Vec solve_transpose(const Mat& A, const Vec& rhs) {
  Eigen::FullPivLU<Mat> lu(A.transpose());
  if (lu.rank() < A.rows()) throw NumericalError("singular differential in phase-space map");
  return lu.solve(rhs);
}

Vec solve(const Mat& A, const Vec& rhs) {
  Eigen::FullPivLU<Mat> lu(A);
  if (lu.rank() < A.rows()) throw NumericalError("singular differential in phase-space map");
  return lu.solve(rhs);
}

SymplecticMapSample finish(const std::function<PhasePoint(const PhasePoint&)>& f,
                           const PhasePoint& xp, PhasePoint out, const ReflectionOptions& opt) {
  SymplecticMapSample s{xp, std::move(out), PMat(), false};
  if (opt.jacobian) {
    s.jacobian = phase_jacobian(f, xp, opt.jacobian_step);
    s.has_jacobian = true;
  }
  return s;
}

ReflectionOptions without_jacobian(ReflectionOptions o) {
  o.jacobian = false;
  return o;
}

}  // namespace

PMat omega_matrix(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  PMat W = PMat::Zero(2 * n, 2 * n);
  W.topLeftCorner(n, n) = m.faraday_matrix(q);
  W.topRightCorner(n, n) = Mat::Identity(n, n);
  W.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return W;
}

ReflectionData reflection_data(const ManifoldModel& m, const Vec& q, const Vec& qp,
                               const ReflectionOptions& opt) {
  ReflectionData d;
  ReflectResult rf = reflect_full(m, q, qp, opt.geodesic);
  LogResult lg = log_map_full(m, q, qp, opt.geodesic);
  d.s = rf.point;
  d.ds = rf.d_da;
  d.dV = lg.dv_da;
  const Vec& o = m.base_point;
  d.alpha = potential(m, q, qp, opt) - d.ds.transpose() * potential(m, q, d.s, opt);
  d.beta = potential(m, o, qp, opt) - d.ds.transpose() * potential(m, o, d.s, opt);
  return d;
}

SymplecticMapSample t_map(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                          const ReflectionOptions& opt) {
  auto f = [&m, &x, o = without_jacobian(opt)](const PhasePoint& y) {
    ReflectionData d = reflection_data(m, x.q, y.q, o);
    return PhasePoint{d.s, solve_transpose(d.ds, y.p + d.beta)};
  };
  return finish(f, xp, f(xp), opt);
}

SymplecticMapSample e_map(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                          const ReflectionOptions& opt) {
  auto f = [&m, &x, o = without_jacobian(opt)](const PhasePoint& y) {
    ReflectionData d = reflection_data(m, x.q, y.q, o);
    return PhasePoint{y.q, y.p - 2.0 * d.dV.transpose() * x.p - d.dPhi()};
  };
  return finish(f, xp, f(xp), opt);
}

SymplecticMapSample sigma_map(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                              const ReflectionOptions& opt) {
  auto f = [&m, &x, o = without_jacobian(opt)](const PhasePoint& y) {
    ReflectionData d = reflection_data(m, x.q, y.q, o);
    return PhasePoint{d.s, solve_transpose(d.ds, y.p - 2.0 * d.dV.transpose() * x.p + d.alpha)};
  };
  return finish(f, xp, f(xp), opt);
}

PhasePoint sigma(const ManifoldModel& m, const PhasePoint& x, const PhasePoint& xp,
                 const ReflectionOptions& opt) {
  return sigma_map(m, x, xp, without_jacobian(opt)).output;
}

PhasePoint sigma_midpoint(const ManifoldModel& m, const PhasePoint& xp, const PhasePoint& xpp,
                          const ReflectionOptions& opt) {
  Midpoint mp = midpoint(m, xp.q, xpp.q, opt.geodesic);
  ReflectionData d = reflection_data(m, mp.c, xp.q, opt);
  Vec rhs = xp.p + d.alpha - d.ds.transpose() * xpp.p;
  return {mp.c, 0.5 * solve_transpose(d.dV, rhs)};
}

PMat phase_jacobian(const std::function<PhasePoint(const PhasePoint&)>& f, const PhasePoint& x,
                    double h) {
  PVec x0 = x.stacked();
  const int N = static_cast<int>(x0.size());
  PMat J(N, N);
  for (int k = 0; k < N; ++k) {
    PVec e = PVec::Zero(N);
    e[k] = h;
    PVec fp = f(PhasePoint::from_stacked(x0 + e)).stacked();
    PVec fm = f(PhasePoint::from_stacked(x0 - e)).stacked();
    PVec fp2 = f(PhasePoint::from_stacked(x0 + 2 * e)).stacked();
    PVec fm2 = f(PhasePoint::from_stacked(x0 - 2 * e)).stacked();
    J.col(k) = (-fp2 + 8.0 * fp - 8.0 * fm + fm2) / (12.0 * h);
  }
  return J;
}

double symplectic_defect(const ManifoldModel& m, const SymplecticMapSample& s) {
  if (!s.has_jacobian) throw ModelError("symplectic_defect: sample has no Jacobian");
  PMat lhs = s.jacobian.transpose() * omega_matrix(m, s.output.q) * s.jacobian;
  return (lhs - omega_matrix(m, s.input.q)).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- autoparallel fields

Mat AutoparallelField::jacobian(const Vec& q) const {
  if (dW) return dW(q);
  const int n = static_cast<int>(q.size());
  const double h = 1e-4;
  Mat J(n, n);
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e[j] = h;
    J.col(j) = (-W(q + 2 * e) + 8.0 * W(q + e) - 8.0 * W(q - e) + W(q - 2 * e)) / (12.0 * h);
  }
  return J;
}

AutoparallelField constant_autoparallel(const Vec& c) {
  AutoparallelField f;
  f.name = "constant";
  f.W = [c](const Vec&) { return c; };
  f.dW = [n = c.size()](const Vec&) { return Mat::Zero(n, n); };
  f.flow = [c](const Vec& q, double t) -> Vec { return q + t * c; };
  return f;
}

AutoparallelField h2_normal_pencil() {
  AutoparallelField f;
  f.name = "h2_normal_pencil";
  f.W = [](const Vec& q) {
    double c = std::sqrt(1.0 + q[0] * q[0]);
    Vec w(2);
    w << c, q[0] * q[1] / c;
    return w;
  };
  f.dW = [](const Vec& q) {
    double c = std::sqrt(1.0 + q[0] * q[0]);
    Mat J(2, 2);
    J << q[0] / c, 0.0, q[1] / (c * c * c), q[0] / c;
    return J;
  };
  // Geodesic normal to the q2-axis through (0, sinh s), parametrized by arc length.
  f.flow = [](const Vec& q, double t) {
    double t0 = std::asinh(q[0]);
    double s = std::asinh(q[1] / std::cosh(t0));
    Vec out(2);
    out << std::sinh(t0 + t), std::cosh(t0 + t) * std::sinh(s);
    return out;
  };
  return f;
}

AutoparallelField geodesic_pencil(const ManifoldModel& m, const Vec& h0, const Vec& d, const Vec& n,
                                  const GeodesicOptions& gopt) {
  if (m.dim != 2) throw ModelError("geodesic_pencil: two-dimensional models only");
  AutoparallelField f;
  f.name = "geodesic_pencil";
  f.W = [m, h0, d, n, gopt](const Vec& q) -> Vec {
    // Solve exp_{h0 + s d}(t n) = q for (s, t).
    Mat frame(2, 2);
    frame << d, n;
    Vec st = solve(frame, q - h0);
    for (int it = 0; it < gopt.max_newton; ++it) {
      GeodesicSolution g = exp_map(m, h0 + st[0] * d, st[1] * n, gopt, true);
      Vec r = g.end - q;
      Mat J(2, 2);
      J << g.jacobi_q * d, g.jacobi * n;
      Vec step = solve(J, r);
      st -= step;
      if (step.norm() < 1e-14 * std::max(1.0, st.norm())) break;
    }
    GeodesicSolution g = exp_map(m, h0 + st[0] * d, st[1] * n, gopt, true);
    if ((g.end - q).norm() > 1e-10 * std::max(1.0, q.norm()))
      throw NumericalError("geodesic_pencil: point not reached by the pencil");
    return g.jacobi * n;
  };
  return f;
}

double autoparallel_residual(const ManifoldModel& m, const AutoparallelField& W, const Vec& q) {
  Vec w = W.W(q);
  Vec r = W.jacobian(q) * w;
  T3 G = m.christoffel(q);
  for (int k = 0; k < m.dim; ++k)
    for (int j = 0; j < m.dim; ++j)
      for (int s = 0; s < m.dim; ++s) r[k] += G(k, j, s) * w[j] * w[s];
  return r.norm();
}

Vec autoparallel_flow(const ManifoldModel& m, const AutoparallelField& W, double t, const Vec& q,
                      const GeodesicOptions& gopt) {
  if (t == 0.0) return q;
  return exp_point(m, q, t * W.W(q), gopt);
}

Mat autoparallel_flow_jacobian(const ManifoldModel& m, const AutoparallelField& W, double t,
                               const Vec& q, const GeodesicOptions& gopt) {
  if (t == 0.0) return Mat::Identity(m.dim, m.dim);
  GeodesicSolution g = exp_map(m, q, t * W.W(q), gopt, true);
  return g.jacobi_q + t * g.jacobi * W.jacobian(q);
}

Vec lifted_flow_covector(const ManifoldModel& m, const AutoparallelField& W, double t, const Vec& q,
                         const ReflectionOptions& opt) {
  if (t == 0.0 || m.field_is_zero()) return Vec::Zero(m.dim);
  Vec Rq = autoparallel_flow(m, W, t, q, opt.geodesic);
  Mat dR = autoparallel_flow_jacobian(m, W, t, q, opt.geodesic);
  return potential(m, Rq, q, opt) - dR.transpose() * potential(m, q, Rq, opt);
}

SymplecticMapSample lifted_flow(const ManifoldModel& m, const AutoparallelField& W, double t,
                                const PhasePoint& x, const ReflectionOptions& opt) {
  auto f = [&m, &W, t, o = without_jacobian(opt)](const PhasePoint& y) {
    Vec Rq = autoparallel_flow(m, W, t, y.q, o.geodesic);
    Mat dR = autoparallel_flow_jacobian(m, W, t, y.q, o.geodesic);
    Vec b = lifted_flow_covector(m, W, t, y.q, o);
    return PhasePoint{Rq, solve_transpose(dR, y.p + b)};
  };
  return finish(f, x, f(x), opt);
}

WaveFn flow_operator(const ManifoldModel& m, const AutoparallelField& W, double t, double hbar,
                     WaveFn psi, const FluxOptions& fopt) {
  return [m, W, t, hbar, psi = std::move(psi), fopt](const Vec& a) -> cplx {
    if (t == 0.0) return psi(a);
    Vec Ra = autoparallel_flow(m, W, t, a, fopt.geodesic);
    Mat dR = autoparallel_flow_jacobian(m, W, t, a, fopt.geodesic);
    double amp = std::sqrt(m.density(Ra) * std::abs(dR.determinant()) / m.density(a));
    double theta = m.field_is_zero() ? 0.0 : flux(m, a, m.base_point, Ra, fopt);
    return amp * std::exp(I * theta / hbar) * psi(Ra);
  };
}

// ---------------------------------------------------------------- permutation formulas

std::string to_string(PermutationKind k) {
  switch (k) {
    case PermutationKind::T: return "T";
    case PermutationKind::E: return "E";
    case PermutationKind::sigma: return "sigma";
    case PermutationKind::flow: return "flow";
  }
  return "?";
}

P1Symbol pullback_symbol(const ManifoldModel& m, const PermutationSetup& s, const P1Symbol& g) {
  const ReflectionOptions opt = without_jacobian(s.opt);
  const PhasePoint x = s.x;
  switch (s.kind) {
    case PermutationKind::T:
    case PermutationKind::sigma: {
      const bool is_t = s.kind == PermutationKind::T;
      VectorField Wt = [m, x, g, opt](const Vec& qp) -> Vec {
        ReflectResult rf = reflect_full(m, x.q, qp, opt.geodesic);
        return solve(rf.d_da, g.W(rf.point));
      };
      ScalarField ph = [m, x, g, opt, is_t](const Vec& qp) {
        ReflectionData d = reflection_data(m, x.q, qp, opt);
        Vec w = solve(d.ds, g.W(d.s));
        Vec shift = is_t ? d.beta : Vec(d.alpha - 2.0 * d.dV.transpose() * x.p);
        return g.phi(d.s) + shift.dot(w);
      };
      return {ph, Wt};
    }
    case PermutationKind::E: {
      ScalarField ph = [m, x, g, opt](const Vec& qp) {
        ReflectionData d = reflection_data(m, x.q, qp, opt);
        return g.phi(qp) - (2.0 * d.dV.transpose() * x.p + d.dPhi()).dot(g.W(qp));
      };
      return {ph, g.W};
    }
    case PermutationKind::flow: {
      if (!s.W) throw ModelError("permutation_check: flow needs an autoparallel field");
      const AutoparallelField W = *s.W;
      const double t = s.t;
      VectorField Wt = [m, W, t, g, opt](const Vec& q) -> Vec {
        Vec Rq = autoparallel_flow(m, W, t, q, opt.geodesic);
        return solve(autoparallel_flow_jacobian(m, W, t, q, opt.geodesic), g.W(Rq));
      };
      ScalarField ph = [m, W, t, g, opt](const Vec& q) {
        Vec Rq = autoparallel_flow(m, W, t, q, opt.geodesic);
        Mat dR = autoparallel_flow_jacobian(m, W, t, q, opt.geodesic);
        Vec b = lifted_flow_covector(m, W, t, q, opt);
        return g.phi(Rq) + b.dot(solve(dR, g.W(Rq)));
      };
      return {ph, Wt};
    }
  }
  throw ModelError("pullback_symbol: unknown kind");
}

PermutationReport permutation_check(const ManifoldModel& m, const PermutationSetup& s,
                                    const P1Symbol& g) {
  const double h = s.grid.spacing().minCoeff();
  const double hbar = s.hbar;
  FluxOptions fopt;
  fopt.geodesic = s.opt.geodesic;
  P1Options popt;
  popt.potential_nodes = s.opt.potential_nodes;
  DifferentialOperator ghat = quantize_p1(m, g.phi, g.W, hbar, popt);
  DifferentialOperator pulled = [&] {
    P1Symbol pb = pullback_symbol(m, s, g);
    return quantize_p1(m, pb.phi, pb.W, hbar, popt);
  }();

  // Conjugation U ghat U^{-1} applied to psi.
  auto conjugated = [&](const WaveFn& psi) -> WaveFn {
    switch (s.kind) {
      case PermutationKind::T:
        return reflection_operator(m, s.x.q, ghat.apply(reflection_operator(m, s.x.q, psi, fopt.geodesic), h),
                                   fopt.geodesic);
      case PermutationKind::E:
        return phase_operator(m, s.x, hbar, ghat.apply(phase_operator(m, s.x, hbar, psi, true, fopt), h),
                              false, fopt);
      case PermutationKind::sigma: {
        WaveFn inv = reflection_operator(m, s.x.q, phase_operator(m, s.x, hbar, psi, true, fopt),
                                         fopt.geodesic);
        return unitary_quantizer(m, s.x, hbar, ghat.apply(inv, h), fopt);
      }
      case PermutationKind::flow: {
        WaveFn inv = flow_operator(m, *s.W, -s.t, hbar, psi, fopt);
        return flow_operator(m, *s.W, s.t, hbar, ghat.apply(inv, h), fopt);
      }
    }
    throw ModelError("permutation_check: unknown kind");
  };

  PermutationReport rep{s.kind, 0.0, {}};
  for (const WaveFn& psi : s.tests) {
    WaveFn lhs = conjugated(psi);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      Vec a = s.grid.point(i);
      cplx r = pulled.apply_at(psi, a, h);
      num = std::max(num, std::abs(lhs(a) - r));
      den = std::max(den, std::abs(r));
    }
    double res = den > 0.0 ? num / den : num;
    rep.per_test.push_back(res);
    rep.residual = std::max(rep.residual, res);
  }
  return rep;
}

}  // namespace mgq
