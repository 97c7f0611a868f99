#include "mgq/geodesics.hpp"

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

#include "mgq/detail/h2.hpp"

namespace mgq {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

// Layout: q(n), v(n), then (if variational) the 2n x 2n propagator
// d(q,v)(t) / d(q0,v0) stored column-major.
struct GeodesicRhs {
  const ManifoldModel* m;
  int n;
  bool variational;

  void operator()(const State& y, State& dy, double) const {
    Vec q = Eigen::Map<const Vec>(y.data(), n);
    Vec v = Eigen::Map<const Vec>(y.data() + n, n);
    T3 G;
    T4 dG;
    if (variational)
      m->fields->christoffel_with_d1(q, G, dG);
    else
      G = m->christoffel(q);
    for (int s = 0; s < n; ++s) {
      dy[s] = v[s];
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc += G(s, i, j) * v[i] * v[j];
      dy[n + s] = -acc;
    }
    if (!variational) return;
    const int N = 2 * n;
    // Linearisation: d(dq)/dt = dv; d(dv^s)/dt = -d_l G^s_ij dq^l v^i v^j - 2 G^s_ij v^i dv^j.
    Mat A(n, n), Bm(n, n);
    for (int s = 0; s < n; ++s)
      for (int l = 0; l < n; ++l) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) a += dG(l, s, i, j) * v[i] * v[j];
          b += 2.0 * G(s, i, l) * v[i];
        }
        A(s, l) = -a;
        Bm(s, l) = -b;
      }
    const double* P = y.data() + N;
    double* dP = dy.data() + N;
    for (int col = 0; col < N; ++col) {
      const double* pc = P + col * N;
      double* dpc = dP + col * N;
      for (int s = 0; s < n; ++s) {
        dpc[s] = pc[n + s];
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += A(s, l) * pc[l] + Bm(s, l) * pc[n + l];
        dpc[n + s] = acc;
      }
    }
  }
};

GeodesicSolution exp_ode(const ManifoldModel& m, const Vec& q, const Vec& v,
                         const GeodesicOptions& opt, bool with_jacobi) {
  const int n = m.dim;
  const int N = 2 * n;
  State y(N + (with_jacobi ? N * N : 0), 0.0);
  for (int i = 0; i < n; ++i) {
    y[i] = q[i];
    y[n + i] = v[i];
  }
  if (with_jacobi)
    for (int k = 0; k < N; ++k) y[N + k * N + k] = 1.0;

  GeodesicSolution sol;
  sol.start = q;
  sol.velocity = v;
  GeodesicRhs rhs{&m, n, with_jacobi};
  auto observer = [&](const State& s, double t) {
    Vec qq = Eigen::Map<const Vec>(s.data(), n);
    if (!m.in_chart(qq) || !qq.allFinite()) {
      std::ostringstream os;
      os << "exp_map: geodesic from (" << q.transpose() << ") with velocity (" << v.transpose()
         << ") leaves the chart at t=" << t;
      throw NumericalError(os.str());
    }
    if (opt.keep_path) sol.path.push_back({t, qq, Eigen::Map<const Vec>(s.data() + n, n)});
  };
  try {
    if (opt.fixed_steps > 0) {
      odeint::runge_kutta_fehlberg78<State> stepper;
      odeint::integrate_n_steps(stepper, rhs, y, 0.0, 1.0 / opt.fixed_steps, opt.fixed_steps,
                                observer);
    } else {
      auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
      odeint::integrate_adaptive(stepper, rhs, y, 0.0, 1.0, 0.05, observer);
    }
  } catch (const odeint::step_adjustment_error& e) {
    throw NumericalError(std::string("exp_map: step-size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw NumericalError(std::string("exp_map: integrator made no progress: ") + e.what());
  }
  sol.end = Eigen::Map<const Vec>(y.data(), n);
  sol.end_velocity = Eigen::Map<const Vec>(y.data() + n, n);
  if (with_jacobi) {
    sol.has_jacobi = true;
    sol.jacobi_q = Mat(n, n);
    sol.jacobi = Mat(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        sol.jacobi_q(i, k) = y[N + k * N + i];
        sol.jacobi(i, k) = y[N + (n + k) * N + i];
      }
  }
  return sol;
}

GeodesicSolution exp_h2(const Vec& q, const Vec& v, bool with_jacobi, bool keep_path) {
  GeodesicSolution sol;
  sol.start = q;
  sol.velocity = v;
  using AD = detail::AD1<4>;
  AD qa[2] = {detail::seed1<4>(q[0], 0), detail::seed1<4>(q[1], 1)};
  AD va[2] = {detail::seed1<4>(v[0], 2), detail::seed1<4>(v[1], 3)};
  AD out[2];
  detail::h2_exp(qa, va, out);
  sol.end = Vec(2);
  sol.end << out[0].value(), out[1].value();
  // End velocity: d/dt exp_q(t v) at t = 1 equals d exp_q(v)/dv applied to v.
  Mat Jv(2, 2), Jq(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      Jq(i, k) = out[i].derivatives()(k);
      Jv(i, k) = out[i].derivatives()(2 + k);
    }
  sol.end_velocity = Jv * v;
  if (with_jacobi) {
    sol.has_jacobi = true;
    sol.jacobi = Jv;
    sol.jacobi_q = Jq;
  }
  if (keep_path) {
    const int steps = 32;
    for (int k = 0; k <= steps; ++k) {
      double t = static_cast<double>(k) / steps;
      GeodesicSolution part = exp_h2(q, t * v, true, false);
      sol.path.push_back({t, part.end, part.jacobi * v});
    }
  }
  return sol;
}

}  // namespace

GeodesicSolution exp_map(const ManifoldModel& m, const Vec& q, const Vec& v,
                         const GeodesicOptions& opt, bool with_jacobi) {
  m.require_in_chart(q, "exp_map");
  if (v.size() != m.dim) throw ModelError("exp_map: velocity has wrong dimension");
  GeodesicSolution sol;
  switch (m.geodesic_kind) {
    case GeodesicKind::flat: {
      sol.start = q;
      sol.velocity = v;
      sol.end = q + v;
      sol.end_velocity = v;
      if (with_jacobi) {
        sol.has_jacobi = true;
        sol.jacobi = Mat::Identity(m.dim, m.dim);
        sol.jacobi_q = Mat::Identity(m.dim, m.dim);
      }
      if (opt.keep_path)
        for (int k = 0; k <= 16; ++k) {
          double t = k / 16.0;
          sol.path.push_back({t, q + t * v, v});
        }
      break;
    }
    case GeodesicKind::hyperboloid:
      sol = exp_h2(q, v, with_jacobi, opt.keep_path);
      break;
    case GeodesicKind::ode:
      return exp_ode(m, q, v, opt, with_jacobi);
  }
  if (!m.in_chart(sol.end) || !sol.end.allFinite()) {
    std::ostringstream os;
    os << "exp_map: endpoint (" << sol.end.transpose() << ") outside chart";
    throw NumericalError(os.str());
  }
  return sol;
}

Vec exp_point(const ManifoldModel& m, const Vec& q, const Vec& v, const GeodesicOptions& opt) {
  return exp_map(m, q, v, opt, false).end;
}

std::vector<RaySample> geodesic_ray(const ManifoldModel& m, const Vec& q, const Vec& v,
                                    const std::vector<double>& times, const GeodesicOptions& opt) {
  m.require_in_chart(q, "geodesic_ray");
  const int n = m.dim;
  std::vector<RaySample> out;
  out.reserve(times.size());
  for (size_t k = 0; k < times.size(); ++k)
    if (times[k] < 0.0 || times[k] > 1.0 || (k > 0 && times[k] < times[k - 1]))
      throw ModelError("geodesic_ray: times must be increasing within [0, 1]");
  if (m.geodesic_kind != GeodesicKind::ode) {
    for (double t : times) {
      GeodesicSolution g = exp_map(m, q, t * v, opt, true);
      out.push_back({t, g.end, g.jacobi * v, t * g.jacobi, g.jacobi_q});
    }
    return out;
  }
  const int N = 2 * n;
  State y(N + N * N, 0.0);
  for (int i = 0; i < n; ++i) {
    y[i] = q[i];
    y[n + i] = v[i];
  }
  for (int k = 0; k < N; ++k) y[N + k * N + k] = 1.0;
  std::vector<double> grid;
  if (times.empty() || times.front() > 0.0) grid.push_back(0.0);
  grid.insert(grid.end(), times.begin(), times.end());
  if (grid.back() < 1.0) grid.push_back(1.0);
  size_t next = 0;
  GeodesicRhs rhs{&m, n, true};
  auto observer = [&](const State& s, double t) {
    Vec qq = Eigen::Map<const Vec>(s.data(), n);
    if (!m.in_chart(qq) || !qq.allFinite()) {
      std::ostringstream os;
      os << "geodesic_ray: geodesic from (" << q.transpose() << ") leaves the chart at t=" << t;
      throw NumericalError(os.str());
    }
    while (next < times.size() && std::abs(times[next] - t) <= 1e-14) {
      RaySample r{times[next], qq, Eigen::Map<const Vec>(s.data() + n, n), Mat(n, n), Mat(n, n)};
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < n; ++c) {
          r.d_dq(i, c) = s[N + c * N + i];
          r.d_dv(i, c) = s[N + (n + c) * N + i];
        }
      out.push_back(std::move(r));
      ++next;
    }
  };
  try {
    if (opt.fixed_steps > 0) {
      odeint::runge_kutta_fehlberg78<State> stepper;
      odeint::integrate_times(stepper, rhs, y, grid.begin(), grid.end(), 1.0 / opt.fixed_steps,
                              observer);
    } else {
      auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
      odeint::integrate_times(stepper, rhs, y, grid.begin(), grid.end(), 0.05, observer);
    }
  } catch (const odeint::step_adjustment_error& e) {
    throw NumericalError(std::string("geodesic_ray: step-size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw NumericalError(std::string("geodesic_ray: integrator made no progress: ") + e.what());
  }
  if (out.size() != times.size()) throw NumericalError("geodesic_ray: missed observation times");
  return out;
}

LogResult log_map_full(const ManifoldModel& m, const Vec& q, const Vec& a,
                       const GeodesicOptions& opt) {
  m.require_in_chart(q, "log_map");
  m.require_in_chart(a, "log_map");
  const int n = m.dim;
  LogResult r;
  if (m.geodesic_kind == GeodesicKind::flat) {
    r.v = a - q;
    r.dv_da = Mat::Identity(n, n);
    r.dv_dq = -Mat::Identity(n, n);
    return r;
  }
  if (m.geodesic_kind == GeodesicKind::hyperboloid) {
    using AD = detail::AD1<4>;
    AD qa[2] = {detail::seed1<4>(q[0], 0), detail::seed1<4>(q[1], 1)};
    AD aa[2] = {detail::seed1<4>(a[0], 2), detail::seed1<4>(a[1], 3)};
    AD out[2];
    detail::h2_log(qa, aa, out);
    r.v = Vec(2);
    r.dv_da = Mat(2, 2);
    r.dv_dq = Mat(2, 2);
    for (int i = 0; i < 2; ++i) {
      r.v[i] = out[i].value();
      for (int k = 0; k < 2; ++k) {
        r.dv_dq(i, k) = out[i].derivatives()(k);
        r.dv_da(i, k) = out[i].derivatives()(2 + k);
      }
    }
    return r;
  }

  // Shooting with Newton on v; the Jacobi frame is the Newton Jacobian.
  const double scale = std::max(1.0, a.norm());
  // The chart difference can overshoot badly on curved bases; shrink until the
  // trial geodesic stays in the chart.
  Vec v = a - q;
  GeodesicSolution sol;
  for (int shrink = 0;; ++shrink) {
    try {
      sol = exp_map(m, q, v, opt, true);
      break;
    } catch (const NumericalError&) {
      if (shrink == 40) throw;
      v *= 0.5;
    }
  }
  Vec res = sol.end - a;
  double best = res.norm();
  int it = 0;
  for (; it < opt.max_newton && best > opt.newton_tol * scale; ++it) {
    Eigen::FullPivLU<Mat> lu(sol.jacobi);
    if (lu.rank() < n || std::abs(lu.determinant()) < 1e-14)
      throw NumericalError("log_map: degenerate Jacobi frame (near-conjugate point)");
    Vec step = -lu.solve(res);
    double lambda = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt) {
      Vec vt = v + lambda * step;
      try {
        GeodesicSolution trial = exp_map(m, q, vt, opt, true);
        Vec rt = trial.end - a;
        if (rt.norm() < best || rt.norm() <= opt.newton_tol * scale) {
          v = vt;
          sol = std::move(trial);
          res = rt;
          best = rt.norm();
          improved = true;
          break;
        }
      } catch (const NumericalError&) {
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (!(best <= std::max(opt.newton_tol * scale * 100.0, 1e-10 * scale))) {
    std::ostringstream os;
    os << "log_map: Newton did not converge after " << it << " iterations (best residual " << best
       << ")";
    throw NumericalError(os.str());
  }
  Eigen::FullPivLU<Mat> lu(sol.jacobi);
  r.v = v;
  r.dv_da = lu.inverse();
  r.dv_dq = -r.dv_da * sol.jacobi_q;
  r.newton_iterations = it;
  r.residual = best;
  return r;
}

Vec log_map(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt) {
  return log_map_full(m, q, a, opt).v;
}

ReflectResult reflect_full(const ManifoldModel& m, const Vec& q, const Vec& a,
                           const GeodesicOptions& opt) {
  LogResult lg = log_map_full(m, q, a, opt);
  GeodesicSolution g = exp_map(m, q, -lg.v, opt, true);
  ReflectResult r;
  r.point = g.end;
  r.d_da = -g.jacobi * lg.dv_da;
  r.d_dq = g.jacobi_q - g.jacobi * lg.dv_dq;
  return r;
}

Vec reflect(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt) {
  Vec v = log_map(m, q, a, opt);
  return exp_point(m, q, -v, opt);
}

Midpoint midpoint(const ManifoldModel& m, const Vec& a, const Vec& b, const GeodesicOptions& opt) {
  const int n = m.dim;
  Midpoint mp;
  if (m.geodesic_kind == GeodesicKind::flat) {
    mp.c = 0.5 * (a + b);
    mp.u = a - b;
    return mp;
  }
  Vec c = exp_point(m, a, 0.5 * log_map(m, a, b, opt), opt);
  const double scale = std::max(1.0, b.norm());
  double best = 0.0;
  for (int it = 0; it < opt.max_newton; ++it) {
    ReflectResult rf = reflect_full(m, c, a, opt);
    Vec res = rf.point - b;
    best = res.norm();
    if (best <= opt.newton_tol * scale) break;
    Eigen::FullPivLU<Mat> lu(rf.d_dq);
    if (lu.rank() < n) throw NumericalError("midpoint: singular reflection Jacobian");
    Vec step = -lu.solve(res);
    c += step;
    if (step.norm() < 1e-15 * scale) break;
  }
  if (!(best < 1e-9 * scale)) {
    std::ostringstream os;
    os << "midpoint: residual " << best << " after polishing";
    throw NumericalError(os.str());
  }
  mp.c = c;
  mp.u = 2.0 * log_map(m, c, a, opt);
  mp.residual = best;
  return mp;
}

DensityPack densities(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt) {
  const int n = m.dim;
  DensityPack d;
  LogResult la = log_map_full(m, q, a, opt);
  GeodesicSolution ea = exp_map(m, q, la.v, opt, true);
  GeodesicSolution eb = exp_map(m, q, -la.v, opt, true);
  const Vec& b = eb.end;
  LogResult lb = log_map_full(m, q, b, opt);
  const double mu_q = m.density(q), mu_a = m.density(a), mu_b = m.density(b);
  d.j = std::abs((la.dv_dq + lb.dv_dq).determinant()) / std::pow(2.0, n);
  d.e_at_a = mu_a * std::abs(ea.jacobi.determinant()) / mu_q;
  d.e_at_b = mu_b * std::abs(eb.jacobi.determinant()) / mu_q;
  Mat ds = -eb.jacobi * la.dv_da;
  d.measure_ratio = mu_b * std::abs(ds.determinant()) / mu_a;
  d.J = d.j * d.measure_ratio;
  if (!(d.j > 0.0 && d.e_at_a > 0.0 && d.J > 0.0))
    throw NumericalError("densities: singular Jacobi frame");
  return d;
}

double j_density(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt) {
  LogResult la = log_map_full(m, q, a, opt);
  Vec b = exp_point(m, q, -la.v, opt);
  LogResult lb = log_map_full(m, q, b, opt);
  return std::abs((la.dv_dq + lb.dv_dq).determinant()) / std::pow(2.0, m.dim);
}

double e_density(const ManifoldModel& m, const Vec& q, const Vec& a, const GeodesicOptions& opt) {
  Vec v = log_map(m, q, a, opt);
  GeodesicSolution ea = exp_map(m, q, v, opt, true);
  return m.density(a) * std::abs(ea.jacobi.determinant()) / m.density(q);
}

double tangent_norm(const ManifoldModel& m, const Vec& q, const Vec& v) {
  Mat g = m.metric(q);
  return std::sqrt(v.dot(g * v));
}

}  // namespace mgq
