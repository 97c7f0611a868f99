#include "mgq/acceptance_checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mgq/parallel.hpp"
#include "mgq/star_product.hpp"

namespace mgq {

using nlohmann::json;

namespace {

constexpr cplx I{0.0, 1.0};
const std::vector<double> kQuad{0.6, 0.2, -0.3, 0.1, 0.0, 0.2};
const std::vector<double> kModulation{0.3, 0.2, -0.1, 0.1, 0.05, 0.2};

struct NamedModel {
  std::string label;
  ManifoldModel m;
};

ModelSpec spec(BaseKind base, FieldSpec f = {}, int n = 2) {
  ModelSpec s;
  s.base = base;
  s.n = n;
  s.field = std::move(f);
  return s;
}

FieldSpec constant_field(double B) { return {FieldKind::constant, B, {}}; }
FieldSpec area_field(double B, std::vector<double> c = {}) { return {FieldKind::area_form, B, std::move(c)}; }
FieldSpec quadratic_field() { return {FieldKind::quadratic, 0.0, kQuad}; }

std::string label_of(const ModelSpec& s) {
  std::string out = to_string(s.base);
  if (s.base == BaseKind::euclidean) out += std::to_string(s.n);
  out += "/" + to_string(s.field.kind);
  if (s.field.kind == FieldKind::area_form && !s.field.coeffs.empty()) out += "+modulated";
  return out;
}

NamedModel named(const ModelSpec& s) { return {label_of(s), builtin_model(s)}; }

// The models the connection suites sweep: flat, hyperbolic and deformed bases, each with and
// without a field.
std::vector<ModelSpec> all_model_specs() {
  return {spec(BaseKind::euclidean),
          spec(BaseKind::euclidean, constant_field(1.3)),
          spec(BaseKind::euclidean, quadratic_field()),
          spec(BaseKind::euclidean, {}, 3),
          spec(BaseKind::hyperboloid_h2),
          spec(BaseKind::hyperboloid_h2, area_field(1.0)),
          spec(BaseKind::hyperboloid_h2, area_field(1.0, kModulation)),
          spec(BaseKind::deformed_r2),
          spec(BaseKind::deformed_r2, quadratic_field())};
}

std::vector<NamedModel> models_for(const SuiteConfig& c, const std::vector<ModelSpec>& defaults) {
  std::vector<NamedModel> out;
  if (c.model) {
    out.push_back(named(*c.model));
  } else {
    for (const auto& s : defaults) out.push_back(named(s));
  }
  return out;
}

NamedModel single_model(const SuiteConfig& c, const ModelSpec& fallback) {
  return named(c.model ? *c.model : fallback);
}

void require_base(const NamedModel& nm, BaseKind base, const char* suite) {
  if (nm.m.spec.base != base)
    throw ModelError(std::string("model.base: suite ") + suite + " needs " + to_string(base));
}

// A numeric list of length `len` read into a small vector; `what` names the field in errors.
template <class V = Vec>
V vec_of(const json& j, std::size_t len, const std::string& what) {
  if (!j.is_array() || j.size() != len || len > static_cast<std::size_t>(V::MaxRowsAtCompileTime))
    throw ModelError(what + ": expected " + std::to_string(len) + " numbers");
  for (const auto& x : j)
    if (!x.is_number()) throw ModelError(what + ": expected numbers");
  V v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec random_point(std::mt19937_64& rng, int n, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  Vec q(n);
  for (int i = 0; i < n; ++i) q[i] = u(rng);
  return q;
}

PhasePoint random_phase(std::mt19937_64& rng, int n, double rq, double rp) {
  Vec q = random_point(rng, n, rq);
  return {q, random_point(rng, n, rp)};
}

double dist(const PhasePoint& a, const PhasePoint& b) {
  return std::max((a.q - b.q).norm(), (a.p - b.p).norm());
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// value < tolerance; NaN fails.
CheckResult below(const std::string& name, double value, double tol, json measured = json::object(),
                  std::string detail = {}) {
  CheckResult r;
  r.name = name;
  r.value = value;
  r.tolerance = tol;
  r.pass = value < tol;
  r.measured = std::move(measured);
  r.detail = std::move(detail);
  return r;
}

CheckResult predicate(const std::string& name, bool ok, json measured, std::string detail) {
  CheckResult r;
  r.name = name;
  r.pass = ok;
  r.value = ok ? 1.0 : 0.0;
  r.measured = std::move(measured);
  r.detail = std::move(detail);
  return r;
}

// Per-model worst values of one quantity, reduced in model order.
struct PerModel {
  json by_model = json::object();
  double worst = 0.0;
  void add(const std::string& label, double v) {
    by_model[label] = v;
    worst = std::max(worst, std::isnan(v) ? std::numeric_limits<double>::infinity() : v);
  }
};

struct Pair {
  GaussianSymbol f, g;
  PhasePoint x;
};

Pair random_pair(std::mt19937_64& rng, double wlo, double whi, double k) {
  PVec x0(4), x1(4);
  for (int i = 0; i < 4; ++i) {
    x0[i] = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    x1[i] = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
  }
  Pair p;
  p.f = random_gaussian(rng, 2, x0, wlo, whi, k);
  p.g = random_gaussian(rng, 2, x1, wlo, whi, k);
  PVec mid = 0.5 * (x0 + x1);
  p.x = {mid.head(2), mid.tail(2)};
  return p;
}

SuiteResult moyal_suite(const SuiteConfig& c, const char* suite, bool magnetic) {
  const double B = magnetic ? c.param<double>("B") : 0.0;
  const ModelSpec fallback = magnetic ? spec(BaseKind::euclidean, constant_field(B)) : spec(BaseKind::euclidean);
  NamedModel nm = single_model(c, fallback);
  const ManifoldModel& m = nm.m;
  const bool flat_ok = m.spec.base == BaseKind::euclidean && m.dim == 2 &&
                       (magnetic ? m.spec.field.kind == FieldKind::constant : m.field_is_zero());
  if (!flat_ok)
    throw ModelError(std::string("model: suite ") + suite +
                     (magnetic ? " needs euclidean(2) with a constant field"
                               : " needs euclidean(2) without field"));
  const int pairs = c.param<int>("pairs");
  const double hbar = c.param<double>("hbar");
  std::mt19937_64 rng(c.seed);
  std::vector<Pair> ps;
  for (int k = 0; k < pairs; ++k) ps.push_back(random_pair(rng, 0.6, 1.2, 1.0));
  std::vector<double> err(ps.size()), visible(ps.size());
  parallel_for(ps.size(), c.workers, [&](std::size_t k) {
    const Pair& p = ps[k];
    cplx st = star(m, p.f.fourier(m, hbar), p.g.fourier(m, hbar), p.x);
    cplx o = magnetic ? moyal_magnetic(p.f, p.g, p.x, m.faraday_matrix(p.x.q), hbar)
                      : moyal_flat(p.f, p.g, p.x, hbar);
    err[k] = std::abs(st - o) / std::abs(o);
    visible[k] = std::abs(o - moyal_flat(p.f, p.g, p.x, hbar)) / std::abs(o);
  });
  SuiteResult r;
  r.suite = suite;
  const std::string oracle = magnetic ? "magnetic Moyal" : "flat Groenewold-Moyal";
  r.checks.push_back(below("relative_error", max_of(err), c.tol("relative_error"),
                           {{"model", nm.label}, {"per_pair", err}, {"hbar", hbar}},
                           "convolution product against the " + oracle + " oracle"));
  if (magnetic) {
    r.diagnostics["field_effect_min"] = *std::min_element(visible.begin(), visible.end());
    r.diagnostics["B"] = B;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------- config plumbing

double SuiteConfig::tol(const std::string& name) const {
  auto it = tolerances.find(name);
  if (it == tolerances.end()) throw ModelError("tolerances." + name + ": not defined for this suite");
  return it->second;
}

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

SuiteConfig SuiteInfo::configure(std::uint64_t seed, const json& params,
                                 const std::map<std::string, double>& tolerances) const {
  SuiteConfig c;
  c.seed = seed;
  c.params = default_params;
  if (!params.is_null()) {
    if (!params.is_object()) throw ModelError("params: expected a mapping");
    for (const auto& [k, v] : params.items()) {
      if (!default_params.contains(k)) throw ModelError("params." + k + ": unknown for suite " + name);
      const json& d = default_params[k];
      const bool same = (d.is_number() && v.is_number()) || d.type() == v.type();
      if (!same) throw ModelError("params." + k + ": expected " + std::string(d.type_name()));
      if (d.is_number_integer() && !v.is_number_integer())
        throw ModelError("params." + k + ": expected an integer");
      if (v.is_number_integer() && v.get<long long>() < (k == "band" ? 0 : 1))
        throw ModelError("params." + k + (k == "band" ? ": must be non-negative" : ": must be positive"));
      c.params[k] = v;
    }
  }
  c.tolerances = default_tolerances;
  for (const auto& [k, v] : tolerances) {
    if (!default_tolerances.count(k)) throw ModelError("tolerances." + k + ": unknown for suite " + name);
    if (!(v > 0.0)) throw ModelError("tolerances." + k + ": must be positive");
    c.tolerances[k] = v;
  }
  return c;
}

json model_to_json(const ModelSpec& s) {
  json j{{"base", to_string(s.base)}, {"n", s.n}};
  if (s.base == BaseKind::deformed_r2) {
    j["amplitude"] = s.amplitude;
    j["width"] = s.width;
  }
  j["field"] = {{"kind", to_string(s.field.kind)}, {"B", s.field.B}, {"coeffs", s.field.coeffs}};
  if (s.base_point) j["base_point"] = std::vector<double>(s.base_point->data(), s.base_point->data() + s.base_point->size());
  return j;
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw ModelError("model: expected a mapping");
  static const std::vector<std::string> keys{"base", "n", "amplitude", "width", "field", "base_point"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ModelError("model." + k + ": unknown key");
  auto num = [&](const json& o, const std::string& k, const std::string& path) {
    if (!o.at(k).is_number()) throw ModelError(path + ": expected a number");
    return o.at(k).get<double>();
  };
  ModelSpec s;
  if (!j.contains("base") || !j["base"].is_string()) throw ModelError("model.base: required string");
  try {
    s.base = parse_base_kind(j["base"].get<std::string>());
  } catch (const ModelError& e) {
    throw ModelError(std::string("model.base: ") + e.what());
  }
  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) throw ModelError("model.n: expected an integer");
    s.n = j["n"].get<int>();
  }
  if (s.base != BaseKind::euclidean) s.n = 2;
  if (j.contains("amplitude")) s.amplitude = num(j, "amplitude", "model.amplitude");
  if (j.contains("width")) s.width = num(j, "width", "model.width");
  if (j.contains("field")) {
    const json& f = j["field"];
    if (!f.is_object()) throw ModelError("model.field: expected a mapping");
    for (const auto& [k, v] : f.items())
      if (k != "kind" && k != "B" && k != "coeffs") throw ModelError("model.field." + k + ": unknown key");
    if (!f.contains("kind") || !f["kind"].is_string()) throw ModelError("model.field.kind: required string");
    try {
      s.field.kind = parse_field_kind(f["kind"].get<std::string>());
    } catch (const ModelError& e) {
      throw ModelError(std::string("model.field.kind: ") + e.what());
    }
    if (f.contains("B")) s.field.B = num(f, "B", "model.field.B");
    if (f.contains("coeffs")) {
      if (!f["coeffs"].is_array()) throw ModelError("model.field.coeffs: expected a list of numbers");
      for (const auto& v : f["coeffs"]) {
        if (!v.is_number()) throw ModelError("model.field.coeffs: expected a list of numbers");
        s.field.coeffs.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("base_point")) {
    const json& b = j["base_point"];
    if (!b.is_array() || static_cast<int>(b.size()) != s.n) throw ModelError("model.base_point: expected " + std::to_string(s.n) + " numbers");
    for (const auto& v : b)
      if (!v.is_number()) throw ModelError("model.base_point: expected numbers");
    s.base_point = vec_of(b, s.n, "model.base_point");
  }
  try {
    builtin_model(s);
  } catch (const ModelError& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------- 1, 2: Moyal limits

SuiteResult suite_moyal_reduction(const SuiteConfig& c) { return moyal_suite(c, "moyal_reduction", false); }

SuiteResult suite_magnetic_moyal_reduction(const SuiteConfig& c) {
  return moyal_suite(c, "magnetic_moyal_reduction", true);
}

// ---------------------------------------------------------------- 3: quantizer axioms

SuiteResult suite_quantizer_axioms(const SuiteConfig& c) {
  const double hbar = c.param<double>("hbar");
  auto models = models_for(c, {spec(BaseKind::hyperboloid_h2, area_field(1.0)),
                               spec(BaseKind::deformed_r2, quadratic_field())});
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd;
  PerModel pointwise, kernel, complete;
  const int kernels = c.param<int>("kernels");
  for (const auto& [label, m] : models) {
    if (m.dim != 2) throw ModelError("model.n: quantizer_axioms runs on two-dimensional models");
    // Delta_x psi(a) = c(a) psi(s a) is self-adjoint iff c(a) = conj(c(s a)) * ratio(a).
    PhasePoint x{vec2(-0.1, 0.15), vec2(0.7, -0.2)};
    WaveFn one = [](const Vec&) { return cplx(1.0); };
    std::vector<Vec> as;
    for (int k = 0; k < 10; ++k) as.push_back(random_point(rng, 2, 0.8));
    std::vector<double> pw(as.size());
    parallel_for(as.size(), c.workers, [&](std::size_t k) {
      ReflectResult r = reflect_full(m, x.q, as[k]);
      double ratio = m.density(r.point) * std::abs(r.d_da.determinant()) / m.density(as[k]);
      cplx ca = quantizer_at(m, x, hbar, one, as[k]), cs = quantizer_at(m, x, hbar, one, r.point);
      pw[k] = std::abs(ca - std::conj(cs) * ratio) / std::abs(ca);
    });
    pointwise.add(label, max_of(pw));

    // Kernel of a real symbol: F(a, b) = conj F(b, a).
    auto f = gaussian_momentum_symbol(m, [](const Vec& q) { return std::exp(-q.squaredNorm()); },
                                      vec2(0.5, -0.2), 0.8, hbar);
    std::vector<std::pair<Vec, Vec>> ab;
    for (int k = 0; k < 8; ++k) {
      Vec a = random_point(rng, 2, 0.5);
      ab.emplace_back(a, a + random_point(rng, 2, 0.15));
    }
    std::vector<double> kh(ab.size());
    parallel_for(ab.size(), c.workers, [&](std::size_t k) {
      cplx v = kernel_value(m, f, ab[k].first, ab[k].second);
      cplx w = kernel_value(m, f, ab[k].second, ab[k].first);
      kh[k] = std::abs(v - std::conj(w)) / std::max(1.0, std::abs(v));
    });
    kernel.add(label, max_of(kh));

    // Completeness: random smooth kernel -> symbol on the dual momentum grid -> kernel.
    const bool ode = m.geodesic_kind == GeodesicKind::ode;
    const int nodes = ode ? 40 : 64;
    const int probes = ode ? 1 : 2;
    const double w = 0.25;
    struct Job {
      KernelFn K;
      Vec a, b;
    };
    std::vector<Job> jobs;
    for (int t = 0; t < kernels; ++t) {
      std::vector<std::tuple<Vec, Vec, cplx>> bumps;
      for (int k = 0; k < 3; ++k) {
        Vec cq = random_point(rng, 2, 0.3);
        Vec cb = cq + random_point(rng, 2, 0.2);
        double re = nd(rng), im = nd(rng);
        bumps.emplace_back(cq, cb, cplx(re, im));
      }
      KernelFn K = [bumps, w](const Vec& a, const Vec& b) {
        cplx s = 0;
        for (const auto& [al, be, amp] : bumps)
          s += amp * std::exp(-((a - al).squaredNorm() + (b - be).squaredNorm()) / (2 * w * w)) *
               std::exp(I * (a - b).sum());
        return s;
      };
      for (int k = 0; k < probes; ++k) {
        const auto& [al, be, amp] = bumps[k % 3];
        Vec a = al + random_point(rng, 2, 0.1);
        Vec b = be + random_point(rng, 2, 0.1);
        jobs.push_back({K, a, b});
      }
    }
    std::vector<double> ce(jobs.size());
    UQuadrature uq{2.0, nodes};
    parallel_for(jobs.size(), c.workers, [&](std::size_t k) {
      const Job& jb = jobs[k];
      Midpoint mp = midpoint(m, jb.a, jb.b);
      auto slice = wigner_slice(m, jb.K, mp.c, hbar, uq);
      auto ps = slice.dual_momenta();
      std::vector<cplx> fv(ps.size());
      for (std::size_t j = 0; j < ps.size(); ++j) fv[j] = slice.symbol(ps[j]);
      cplx ft = fourier_from_samples(m, mp.c, mp.u, ps, fv, slice.dp_volume(), hbar);
      ce[k] = std::abs(ft / k_cochain_at(m, mp.c, jb.a, jb.b, hbar) - jb.K(jb.a, jb.b));
    });
    complete.add(label, max_of(ce));
  }

  // Trace axiom: tr(f * conj g) = (2 pi hbar)^-n Int f conj(g) dq dp.
  PerModel trace;
  auto trace_models = models_for(c, {spec(BaseKind::euclidean), spec(BaseKind::hyperboloid_h2, area_field(1.0))});
  const double th = c.param<double>("trace_hbar");
  const double L = 5.0;
  const int N = c.param<int>("trace_nodes");
  for (const auto& [label, m] : trace_models) {
    Pair p = random_pair(rng, 0.5, 0.8, 0.5);
    cplx tr = trace_of_product(m, p.f.fourier(m, th), p.g.fourier(m, th), vec2(-L, -L), vec2(L, L), N);
    const double d = 2 * L / N;
    std::vector<cplx> rows(N);
    parallel_for(static_cast<std::size_t>(N), c.workers, [&](std::size_t i) {
      cplx acc = 0.0;
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
          for (int l = 0; l < N; ++l) {
            PhasePoint x{vec2(-L + (i + 0.5) * d, -L + (j + 0.5) * d), vec2(-L + (k + 0.5) * d, -L + (l + 0.5) * d)};
            acc += p.f(x) * std::conj(p.g(x));
          }
      rows[i] = acc;
    });
    cplx direct = 0.0;
    for (const cplx& v : rows) direct += v;
    direct *= std::pow(d, 4) / std::pow(2.0 * std::numbers::pi * th, 2);
    trace.add(label, std::abs(tr - direct) / std::abs(direct));
  }

  SuiteResult r;
  r.suite = "quantizer_axioms";
  r.checks.push_back(below("hermiticity_quantizer", pointwise.worst, c.tol("hermiticity_quantizer"),
                           pointwise.by_model, "pointwise self-adjointness of the quantizer at 10 points"));
  r.checks.push_back(below("hermiticity_kernel", kernel.worst, c.tol("hermiticity_kernel"), kernel.by_model,
                           "kernel of a real symbol is Hermitian at 8 pairs"));
  r.checks.push_back(below("completeness", complete.worst, c.tol("completeness"), complete.by_model,
                           std::to_string(kernels) + " random smooth kernels through symbol and back"));
  r.checks.push_back(below("trace_axiom", trace.worst, c.tol("trace_axiom"), trace.by_model,
                           "trace of f * conj(g) against the phase-space pairing"));
  return r;
}

// ---------------------------------------------------------------- 4: sigma reflections

SuiteResult suite_sigma_reflections(const SuiteConfig& c) {
  NamedModel nm = single_model(c, spec(BaseKind::hyperboloid_h2, area_field(1.0)));
  const ManifoldModel& m = nm.m;
  const ManifoldModel m2 = m.with_base_point(vec_of(c.params.at("gauge_base_point"), m.dim, "params.gauge_base_point"));
  const int samples = c.param<int>("samples");
  std::mt19937_64 rng(c.seed);
  std::vector<PhasePoint> xs, xps;
  for (int k = 0; k < samples; ++k) {
    xs.push_back(random_phase(rng, m.dim, 0.7, 1.0));
    xps.push_back(random_phase(rng, m.dim, 0.7, 1.0));
  }
  ReflectionOptions jo;
  jo.jacobian = true;
  if (m.geodesic_kind == GeodesicKind::ode) {
    jo.geodesic.fixed_steps = 24;
    jo.jacobian_step = 1e-3;
  }
  std::vector<double> inv(samples), fix(samples), sym(samples), gauge(samples);
  parallel_for(xs.size(), c.workers, [&](std::size_t k) {
    const PhasePoint& x = xs[k];
    const PhasePoint& xp = xps[k];
    PhasePoint s = sigma(m, x, xp);
    inv[k] = dist(sigma(m, x, s), xp);
    fix[k] = dist(sigma(m, x, x), x);
    sym[k] = symplectic_defect(m, sigma_map(m, x, xp, jo));
    // Through the factors, which individually depend on the base point.
    gauge[k] = dist(t_map(m2, x, e_map(m2, x, xp).output).output, s);
  });
  SuiteResult r;
  r.suite = "sigma_reflections";
  json meta{{"model", nm.label}, {"samples", samples}};
  r.checks.push_back(below("involution", max_of(inv), c.tol("involution"), meta, "sigma_x(sigma_x(x')) = x'"));
  r.checks.push_back(below("fixed_point", max_of(fix), c.tol("fixed_point"), meta, "sigma_x(x) = x"));
  r.checks.push_back(below("symplectic", max_of(sym), c.tol("symplectic"), meta, "J^T Omega J = Omega"));
  r.checks.push_back(below("gauge_independence", max_of(gauge), c.tol("gauge_independence"), meta,
                           "sigma_x = T_x E_x computed in a second gauge against sigma_x"));
  return r;
}

// ---------------------------------------------------------------- 5, 6, 7: connection

SuiteResult suite_connection_routes(const SuiteConfig& c) {
  auto models = models_for(c, all_model_specs());
  const int points = c.param<int>("points");
  const double lo = c.tol("order_min"), hi = c.tol("order_max");
  std::mt19937_64 rng(c.seed);
  bool orders_ok = true;
  PerModel finest;
  json orders = json::object();
  for (const auto& [label, m] : models) {
    std::vector<PhasePoint> xs;
    for (int t = 0; t < points; ++t) xs.push_back(random_phase(rng, m.dim, 0.8, 1.0));
    std::vector<RouteReport> reps(xs.size());
    parallel_for(xs.size(), c.workers, [&](std::size_t k) { reps[k] = connection_route_check(m, xs[k]); });
    double omin = 1e300, omax = -1e300, fin = 0.0;
    int exact = 0;
    for (const auto& rep : reps) {
      orders_ok = orders_ok && rep.passes(lo, hi);
      fin = std::max(fin, rep.errors.back());
      if (rep.exact) {
        ++exact;
      } else {
        omin = std::min(omin, rep.order);
        omax = std::max(omax, rep.order);
      }
    }
    json o{{"exact_points", exact}};
    if (exact < points) {
      o["order_min"] = omin;
      o["order_max"] = omax;
    }
    orders[label] = o;
    finest.add(label, fin);
  }
  SuiteResult r;
  r.suite = "connection_routes";
  r.checks.push_back(predicate("convergence_order", orders_ok, orders,
                               "second differences of sigma converge to the explicit symbols at an order in [" +
                                   std::to_string(lo).substr(0, 4) + ", " + std::to_string(hi).substr(0, 4) +
                                   "]; flat models are exact"));
  r.checks.push_back(below("finest_error", finest.worst, c.tol("finest_error"), finest.by_model,
                           "error at the smallest step"));
  return r;
}

SuiteResult suite_ricci_check(const SuiteConfig& c) {
  auto models = models_for(c, all_model_specs());
  const int points = c.param<int>("points");
  std::mt19937_64 rng(c.seed);
  PerModel assembled, fd, asym;
  for (const auto& [label, m] : models) {
    std::vector<PhasePoint> xs;
    for (int t = 0; t < points; ++t) xs.push_back(random_phase(rng, m.dim, 0.8, 1.5));
    std::vector<double> ea(xs.size()), ef(xs.size()), es(xs.size());
    parallel_for(xs.size(), c.workers, [&](std::size_t k) {
      auto pc = curvature_phase(m, xs[k]);
      P2 expected = ricci_expected(m, xs[k].q);
      ea[k] = (pc.ricci - expected).max_abs();
      ef[k] = (pc.ricci_fd - expected).max_abs();
      double s = 0.0;
      for (int i = 0; i < 2 * m.dim; ++i)
        for (int j = 0; j < 2 * m.dim; ++j) s = std::max(s, std::abs(pc.ricci_fd(i, j) - pc.ricci_fd(j, i)));
      es[k] = s;
    });
    assembled.add(label, max_of(ea));
    fd.add(label, max_of(ef));
    asym.add(label, max_of(es));
  }
  // Same base, field switched on or off: the Ricci tensors coincide.
  PerModel field;
  if (!c.model) {
    const std::vector<std::pair<ModelSpec, ModelSpec>> pairs{
        {spec(BaseKind::euclidean), spec(BaseKind::euclidean, quadratic_field())},
        {spec(BaseKind::hyperboloid_h2), spec(BaseKind::hyperboloid_h2, area_field(1.0, kModulation))},
        {spec(BaseKind::deformed_r2), spec(BaseKind::deformed_r2, quadratic_field())}};
    for (const auto& [a, b] : pairs) {
      NamedModel ma = named(a), mb = named(b);
      double worst = 0.0;
      for (int t = 0; t < 5; ++t) {
        PhasePoint x = random_phase(rng, 2, 0.8, 1.5);
        worst = std::max(worst, (curvature_phase(ma.m, x).ricci_fd - curvature_phase(mb.m, x).ricci_fd).max_abs());
      }
      field.add(ma.label + " vs " + mb.label, worst);
    }
  }
  SuiteResult r;
  r.suite = "ricci_check";
  r.checks.push_back(below("ricci_assembled", assembled.worst, c.tol("ricci"), assembled.by_model,
                           "Ricci of the assembled curvature against (2/3) diag(base Ricci, 0)"));
  r.checks.push_back(below("ricci_finite_difference", fd.worst, c.tol("ricci"), fd.by_model,
                           "Ricci of the finite-difference curvature against (2/3) diag(base Ricci, 0)"));
  r.checks.push_back(below("ricci_symmetric", asym.worst, c.tol("ricci"), asym.by_model,
                           "antisymmetric part of the finite-difference Ricci tensor"));
  if (!c.model)
    r.checks.push_back(below("field_independence", field.worst, c.tol("ricci"), field.by_model,
                             "Ricci tensors with and without field on the same base"));
  return r;
}

SuiteResult suite_symplectic_connection(const SuiteConfig& c) {
  auto models = models_for(c, all_model_specs());
  const int points = c.param<int>("points");
  std::mt19937_64 rng(c.seed);
  PerModel res;
  for (const auto& [label, m] : models) {
    std::vector<PhasePoint> xs;
    for (int t = 0; t < points; ++t) xs.push_back(random_phase(rng, m.dim, 0.8, 2.0));
    std::vector<double> v(xs.size());
    parallel_for(xs.size(), c.workers, [&](std::size_t k) { v[k] = nabla_omega_residual(m, xs[k]); });
    res.add(label, max_of(v));
  }
  SuiteResult r;
  r.suite = "symplectic_connection";
  r.checks.push_back(below("nabla_omega", res.worst, c.tol("nabla_omega"), res.by_model,
                           "covariant derivative of the magnetic symplectic form"));
  return r;
}

// ---------------------------------------------------------------- 8: hbar expansion

SuiteResult suite_hbar_expansion(const SuiteConfig& c) {
  NamedModel nm = single_model(c, spec(BaseKind::hyperboloid_h2, area_field(1.0)));
  const ManifoldModel& m = nm.m;
  if (m.dim != 2) throw ModelError("model.n: hbar_expansion runs on two-dimensional models");
  // Fixed pair of broad Gaussians; probes at both centres and between them.
  std::mt19937_64 rng(c.seed);
  PVec x0 = vec_of<PVec>(c.params.at("centre_f"), 4, "params.centre_f");
  PVec x1 = vec_of<PVec>(c.params.at("centre_g"), 4, "params.centre_g");
  GaussianSymbol f = random_gaussian(rng, 2, x0, 0.9, 1.5, 0.5);
  GaussianSymbol g = random_gaussian(rng, 2, x1, 0.9, 1.5, 0.5);
  std::vector<PhasePoint> probes;
  for (PVec X : {x0, PVec(0.5 * (x0 + x1)), x1}) probes.push_back({X.head(2), X.tail(2)});

  ExpansionOptions o;
  o.sweep = c.param<std::vector<double>>("hbar_sweep");
  o.ricci_coefficient = c.param<double>("ricci_coefficient");
  const double alt = c.param<double>("alternative_ricci_coefficient");
  std::vector<ExpansionReport> reps(probes.size());
  parallel_for(probes.size(), c.workers, [&](std::size_t k) { reps[k] = expansion_check(m, f, g, probes[k], o); });

  SuiteResult r;
  r.suite = "hbar_expansion";
  std::vector<double> o1, o2, o2alt;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& rep = reps[k];
    o1.push_back(rep.o1);
    o2.push_back(rep.o2);
    cplx s = second_order_bracket(m, f, g, probes[k], alt);
    std::vector<double> res;
    for (std::size_t i = 0; i < rep.hbar_sweep.size(); ++i) {
      const double h = rep.hbar_sweep[i];
      res.push_back(std::abs(rep.exact[i] - rep.order1[i] + h * h / 8.0 * s));
    }
    o2alt.push_back(loglog_slope(rep.hbar_sweep, res));
    std::ostringstream csv;
    rep.write_csv(csv);
    r.artifacts.push_back({"expansion_probe" + std::to_string(k) + ".csv", csv.str()});
  }
  const double o1lo = c.tol("o1_min"), o1hi = c.tol("o1_max"), o2lo = c.tol("o2_min"), o2hi = c.tol("o2_max");
  auto in = [](const std::vector<double>& v, double lo, double hi) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x >= lo && x <= hi; });
  };
  json meta{{"model", nm.label}, {"hbar", o.sweep}, {"ricci_coefficient", o.ricci_coefficient}};
  json m1 = meta, m2 = meta;
  m1["orders"] = o1;
  m2["orders"] = o2;
  r.checks.push_back(predicate("first_order_residual", in(o1, o1lo, o1hi), m1,
                               "fitted order of |exact - fg + (i hbar/2){f,g}|"));
  r.checks.push_back(predicate("second_order_residual", in(o2, o2lo, o2hi), m2,
                               "fitted order after subtracting the hbar^2 term"));
  r.artifacts.push_back({"plot_expansion.py",
                         "import glob\nimport pandas as pd\nimport matplotlib.pyplot as plt\n\n"
                         "for f in sorted(glob.glob('expansion_probe*.csv')):\n"
                         "    d = pd.read_csv(f)\n"
                         "    for col in ('res0', 'res1', 'res2'):\n"
                         "        plt.loglog(d['hbar'], d[col], 'o-', label=f'{f[:-4]} {col}')\n"
                         "plt.xlabel('hbar')\nplt.legend(fontsize=6)\nplt.savefig('expansion.png', dpi=150)\n"});
  r.diagnostics["alternative_ricci_coefficient"] = alt;
  r.diagnostics["second_order_orders_alternative"] = o2alt;
  r.diagnostics["second_order_alternative_in_range"] = in(o2alt, o2lo, o2hi);
  json reports = json::array();
  for (const auto& rep : reps) reports.push_back(json::parse(rep.to_json()));
  r.diagnostics["reports"] = reports;
  return r;
}

// ---------------------------------------------------------------- 9: front map

SuiteResult suite_front_map(const SuiteConfig& c) {
  NamedModel scan_model = single_model(c, spec(BaseKind::hyperboloid_h2));
  require_base(scan_model, BaseKind::hyperboloid_h2, "front_map");
  ModelSpec fs = scan_model.m.spec;
  if (fs.field.kind == FieldKind::zero) fs.field = area_field(1.0);
  NamedModel kernel_model = named(fs);
  const int N = c.param<int>("nodes");
  const int band = c.param<int>("band");
  const double hbar = c.param<double>("hbar");
  Vec y = vec_of(c.params.at("y"), 2, "params.y"), z = vec_of(c.params.at("z"), 2, "params.z");
  Grid g = Grid::square(2, c.param<double>("half_width"), N);

  FrontMap f;
  f.y = y;
  f.z = z;
  f.grid = g;
  f.cls.assign(g.size(), FrontClass::outside);
  f.J.assign(g.size(), 0.0);
  parallel_for(g.size(), c.workers, [&](std::size_t i) {
    TripleReflectionSolution s;
    try {
      s = triple_fixed_point(scan_model.m, g.point(i), y, z);
    } catch (const NumericalError&) {
      s.exists = false;
    }
    f.J[i] = s.exists ? s.jacobian_J : 0.0;
    f.cls[i] = !s.exists ? FrontClass::outside : (s.front_boundary ? FrontClass::boundary : FrontClass::inside);
  });

  std::vector<int> oracle(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) oracle[i] = std::abs(h2_det(g.point(i), y, z)) < 1.0;
  std::vector<char> in_band(g.size(), 0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int di = -band; di <= band && !in_band[i * N + j]; ++di)
        for (int dj = -band; dj <= band; ++dj) {
          int ii = i + di, jj = j + dj;
          if (ii >= 0 && ii < N && jj >= 0 && jj < N && oracle[ii * N + jj] != oracle[i * N + j]) {
            in_band[i * N + j] = 1;
            break;
          }
        }
  int compared = 0, mismatches = 0, inside = 0, outside = 0, banded = 0;
  std::vector<std::size_t> outside_points;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (in_band[i]) {
      ++banded;
      continue;
    }
    ++compared;
    mismatches += (f.cls[i] == FrontClass::inside) != static_cast<bool>(oracle[i]);
    if (oracle[i]) {
      ++inside;
    } else {
      ++outside;
      outside_points.push_back(i);
    }
  }

  // The product kernel at triples whose midpoint triangle does not exist.
  std::mt19937_64 rng(c.seed);
  std::vector<std::array<Vec, 3>> moms;
  for (std::size_t k = 0; k < outside_points.size(); ++k)
    moms.push_back({random_point(rng, 2, 1.0), random_point(rng, 2, 1.0), random_point(rng, 2, 1.0)});
  std::vector<double> kabs(outside_points.size());
  std::vector<char> flagged(outside_points.size());
  parallel_for(outside_points.size(), c.workers, [&](std::size_t k) {
    PhasePoint x{g.point(outside_points[k]), moms[k][0]};
    StarKernelSample s = star_kernel(kernel_model.m, x, {y, moms[k][1]}, {z, moms[k][2]}, hbar);
    kabs[k] = std::abs(s.value);
    flagged[k] = s.exists;
  });
  const double kmax = max_of(kabs);
  const int kexists = static_cast<int>(std::count(flagged.begin(), flagged.end(), 1));

  SuiteResult r;
  r.suite = "front_map";
  r.checks.push_back(predicate("classification", mismatches == 0 && inside > 0 && outside > 0,
                               {{"model", scan_model.label}, {"compared", compared}, {"mismatches", mismatches},
                                {"inside", inside}, {"outside", outside}},
                               "fixed-point classification against |det[x y z]| < 1 outside a " +
                                   std::to_string(band) + "-cell band"));
  r.checks.push_back(predicate("kernel_zero_outside", kmax == 0.0 && kexists == 0,
                               {{"model", kernel_model.label}, {"points", outside_points.size()},
                                {"max_abs_kernel", kmax}, {"triangles_found", kexists}},
                               "product kernel is exactly zero where no triangle exists"));
  r.diagnostics["boundary_band_fraction"] = static_cast<double>(banded) / static_cast<double>(g.size());
  r.diagnostics["front_boundary_fraction"] = f.boundary_fraction();
  std::ostringstream csv;
  write_csv(csv, f);
  r.artifacts.push_back({"front_map.csv", csv.str()});
  r.artifacts.push_back({"plot_front_map.py",
                         "import pandas as pd\nimport matplotlib.pyplot as plt\n\n"
                         "d = pd.read_csv('front_map.csv')\n"
                         "colors = d['class'].map({'inside': 0, 'boundary': 1, 'outside': 2})\n"
                         "plt.scatter(d['x1'], d['x2'], c=colors, s=12, cmap='viridis')\n"
                         "plt.gca().set_aspect('equal')\nplt.savefig('front_map.png', dpi=150)\n"});
  return r;
}

// ---------------------------------------------------------------- 10: associativity

SuiteResult suite_associativity(const SuiteConfig& c) {
  auto models = models_for(c, {spec(BaseKind::hyperboloid_h2, area_field(1.0)),
                               spec(BaseKind::deformed_r2, quadratic_field()),
                               spec(BaseKind::euclidean, quadratic_field())});
  const int chains = c.param<int>("chains");
  const double hbar = c.param<double>("hbar");
  std::mt19937_64 rng(c.seed);
  PerModel coc;
  for (const auto& [label, m] : models) {
    std::vector<std::array<Vec, 4>> ps;
    for (int k = 0; k < chains; ++k)
      ps.push_back({random_point(rng, m.dim, 0.6), random_point(rng, m.dim, 0.6), random_point(rng, m.dim, 0.6),
                    random_point(rng, m.dim, 0.6)});
    std::vector<double> v(ps.size());
    parallel_for(ps.size(), c.workers, [&](std::size_t k) {
      v[k] = cocycle_identity_residual(m, ps[k][0], ps[k][1], ps[k][2], ps[k][3], hbar);
    });
    coc.add(label, max_of(v));
  }

  NamedModel sm = single_model(c, spec(BaseKind::hyperboloid_h2, area_field(1.0)));
  if (sm.m.dim != 2) throw ModelError("model.n: associativity runs on two-dimensional models");
  const int triples = c.param<int>("symbol_triples");
  const double sh = c.param<double>("symbol_hbar");
  ConvolutionOptions co;
  co.m_nodes = 24;
  struct Probe {
    FourierSymbol F, G, H;
    Vec q, u;
  };
  std::vector<Probe> probes;
  for (int t = 0; t < triples; ++t) {
    PVec c0(4), c1(4), c2(4);
    for (PVec* cc : {&c0, &c1, &c2})
      for (int i = 0; i < 4; ++i) (*cc)[i] = std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
    auto F = random_gaussian(rng, 2, c0, 0.7, 1.2, 0.5).fourier(sm.m, sh);
    auto G = random_gaussian(rng, 2, c1, 0.7, 1.2, 0.5).fourier(sm.m, sh);
    auto H = random_gaussian(rng, 2, c2, 0.7, 1.2, 0.5).fourier(sm.m, sh);
    Vec q = random_point(rng, 2, 0.1), u = random_point(rng, 2, 0.1);
    probes.push_back({F, G, H, q, u});
  }
  std::vector<double> rel(probes.size());
  parallel_for(probes.size(), c.workers, [&](std::size_t k) {
    const Probe& p = probes[k];
    auto left = groupoid_convolve(sm.m, groupoid_convolve(sm.m, p.F, p.G, co), p.H, co);
    auto right = groupoid_convolve(sm.m, p.F, groupoid_convolve(sm.m, p.G, p.H, co), co);
    cplx l = left.f(p.q, p.u), rr = right.f(p.q, p.u);
    rel[k] = std::abs(l - rr) / std::abs(l);
  });

  SuiteResult r;
  r.suite = "associativity";
  r.checks.push_back(below("cocycle_identity", coc.worst, c.tol("cocycle_identity"), coc.by_model,
                           std::to_string(chains) + " random chains of three composable arrows per model"));
  r.checks.push_back(below("convolution_associativity", max_of(rel), c.tol("convolution_associativity"),
                           {{"model", sm.label}, {"per_triple", rel}, {"hbar", sh}},
                           "(f.g).h against f.(g.h) at a random groupoid element"));
  return r;
}

// ---------------------------------------------------------------- 11: membrane phase

SuiteResult suite_membrane_phase(const SuiteConfig& c) {
  auto models = models_for(c, {spec(BaseKind::euclidean), spec(BaseKind::euclidean, constant_field(1.3)),
                               spec(BaseKind::euclidean, quadratic_field()), spec(BaseKind::hyperboloid_h2),
                               spec(BaseKind::hyperboloid_h2, area_field(1.0)),
                               spec(BaseKind::deformed_r2, quadratic_field())});
  const int triples = c.param<int>("triples");
  std::mt19937_64 rng(c.seed);
  PerModel diff;
  json missing = json::object();
  for (const auto& [label, m] : models) {
    std::vector<std::array<PhasePoint, 3>> ts;
    for (int k = 0; k < triples; ++k)
      ts.push_back({random_phase(rng, m.dim, 0.5, 1.0), random_phase(rng, m.dim, 0.5, 1.0),
                    random_phase(rng, m.dim, 0.5, 1.0)});
    std::vector<double> v(ts.size());
    parallel_for(ts.size(), c.workers, [&](std::size_t k) {
      const auto& [x, y, z] = ts[k];
      auto sol = triple_fixed_point(m, x.q, y.q, z.q);
      // A triple without a triangle counts as a failure: the sample region lies inside the front.
      v[k] = sol.exists ? membrane_phase(m, x, y, z, sol).difference() : std::numeric_limits<double>::infinity();
    });
    missing[label] = std::count_if(v.begin(), v.end(), [](double d) { return std::isinf(d); });
    diff.add(label, max_of(v));
  }
  SuiteResult r;
  r.suite = "membrane_phase";
  r.checks.push_back(below("algebraic_vs_geometric", diff.worst, c.tol("algebraic_vs_geometric"), diff.by_model,
                           "membrane phase from corner data against the line integral over the lifted sides"));
  r.diagnostics["triples_without_triangle"] = missing;
  return r;
}

// ---------------------------------------------------------------- 12: Maxwell identities

SuiteResult suite_maxwell_identities(const SuiteConfig& c) {
  auto models = models_for(c, {spec(BaseKind::euclidean, quadratic_field()),
                               spec(BaseKind::hyperboloid_h2, area_field(1.0)),
                               spec(BaseKind::hyperboloid_h2, area_field(1.0, kModulation))});
  const int points = c.param<int>("points");
  std::mt19937_64 rng(c.seed);
  PerModel duality, cyclic, coupling, continuity, kappa, closed;
  for (const auto& [label, m] : models) {
    std::vector<Vec> qs;
    for (int t = 0; t < points; ++t) qs.push_back(random_point(rng, m.dim, 0.8));
    std::vector<MaxwellReport> reps(qs.size());
    parallel_for(qs.size(), c.workers, [&](std::size_t k) { reps[k] = maxwell_identities(m, qs[k]); });
    auto worst = [&](double MaxwellReport::*f) {
      double w = 0.0;
      for (const auto& rep : reps) w = std::max(w, rep.*f);
      return w;
    };
    duality.add(label, worst(&MaxwellReport::duality));
    cyclic.add(label, worst(&MaxwellReport::cyclic));
    coupling.add(label, worst(&MaxwellReport::coupling_curvature));
    if (m.has_metric()) {
      continuity.add(label, worst(&MaxwellReport::continuity));
      kappa.add(label, worst(&MaxwellReport::kappa_exact));
      closed.add(label, worst(&MaxwellReport::kappa_closed));
    }
  }
  SuiteResult r;
  r.suite = "maxwell_identities";
  r.checks.push_back(below("duality", duality.worst, c.tol("duality"), duality.by_model,
                           "the two duality formulas between F_[jk]l and F_j{kl}"));
  r.checks.push_back(below("cyclic", cyclic.worst, c.tol("cyclic"), cyclic.by_model,
                           "cyclic sums of F_j{kl} and F_[jk]l"));
  r.checks.push_back(below("coupling_curvature", coupling.worst, c.tol("coupling_curvature"), coupling.by_model,
                           "antisymmetrized derivative of the coupling tensor against the magnetic curvature"));
  if (!continuity.by_model.empty()) {
    r.checks.push_back(below("continuity", continuity.worst, c.tol("continuity"), continuity.by_model,
                             "divergence of the current covector"));
    r.checks.push_back(below("kappa_exact", kappa.worst, c.tol("kappa_exact"), kappa.by_model,
                             "kappa is the exterior derivative of the current"));
    r.diagnostics["kappa_closed"] = closed.by_model;
  }
  return r;
}

// ---------------------------------------------------------------- 13: permutation formulas

SuiteResult suite_permutation_formulas(const SuiteConfig& c) {
  NamedModel nm = single_model(c, spec(BaseKind::hyperboloid_h2, area_field(1.0)));
  require_base(nm, BaseKind::hyperboloid_h2, "permutation_formulas");
  const ManifoldModel& m = nm.m;
  auto P = h2_normal_pencil();
  P1Symbol g{[](const Vec& q) { return 0.2 * q[0] * q[1]; },
             [](const Vec& q) { return vec2(1.0 + 0.3 * q[1], -0.5 * q[0]); }};
  const std::vector<int> grids = c.param<std::vector<int>>("grids");
  if (grids.size() < 2) throw ModelError("params.grids: need at least two resolutions");
  const double hbar = c.param<double>("hbar");
  auto gaussian = [](Vec cq, double w, Vec k) -> WaveFn {
    return [cq, w, k](const Vec& a) -> cplx {
      return std::exp(-(a - cq).squaredNorm() / (2 * w * w)) * std::exp(I * k.dot(a));
    };
  };
  std::vector<WaveFn> tests{gaussian(vec2(0.1, 0.0), 0.3, vec2(1.0, 0.5)),
                            gaussian(vec2(-0.2, 0.15), 0.25, vec2(-0.5, 2.0))};
  const std::vector<PermutationKind> kinds{PermutationKind::T, PermutationKind::E, PermutationKind::sigma,
                                           PermutationKind::flow};
  std::vector<std::pair<PermutationKind, int>> jobs;
  for (auto k : kinds)
    for (int n : grids) jobs.emplace_back(k, n);
  std::vector<double> res(jobs.size());
  parallel_for(jobs.size(), c.workers, [&](std::size_t j) {
    PermutationSetup s;
    s.kind = jobs[j].first;
    s.x = {vec2(0.1, -0.05), vec2(0.2, 0.1)};
    s.W = &P;
    s.t = 0.3;
    s.hbar = hbar;
    s.grid = Grid::square(2, 1.0, jobs[j].second);
    s.tests = tests;
    res[j] = permutation_check(m, s, g).residual;
  });
  SuiteResult r;
  r.suite = "permutation_formulas";
  json table = json::object(), finest = json::object();
  double worst = 0.0;
  bool shrinking = true;
  const std::size_t G = grids.size();
  std::ostringstream csv;
  csv << "kind,nodes,residual\n";
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    std::vector<double> row(res.begin() + k * G, res.begin() + (k + 1) * G);
    table[to_string(kinds[k])] = row;
    finest[to_string(kinds[k])] = row.back();
    worst = std::max(worst, row.back());
    shrinking = shrinking && row[G - 1] < row[G - 2];
    for (std::size_t i = 0; i < G; ++i) csv << to_string(kinds[k]) << ',' << grids[i] << ',' << row[i] << '\n';
  }
  r.checks.push_back(below("residual", worst, c.tol("residual"),
                           {{"model", nm.label}, {"nodes", grids.back()}, {"per_kind", finest}},
                           "operator identity residual at the finest grid"));
  r.checks.push_back(predicate("refinement", shrinking, {{"nodes", grids}, {"residuals", table}},
                               "residual shrinks under the last grid refinement"));
  r.artifacts.push_back({"permutation_residuals.csv", csv.str()});
  return r;
}

// ---------------------------------------------------------------- registry

const std::vector<SuiteInfo>& suite_registry() {
  static const std::vector<SuiteInfo> reg = [] {
    std::vector<SuiteInfo> v;
    v.push_back({"moyal_reduction", "flat product against the Groenewold-Moyal product on Gaussian pairs", 1,
                 {{"pairs", 10}, {"hbar", 0.3}}, {{"relative_error", 1e-5}}, &suite_moyal_reduction});
    v.push_back({"magnetic_moyal_reduction", "constant-field product against the magnetic Moyal product", 2,
                 {{"pairs", 10}, {"hbar", 0.2}, {"B", 1.0}}, {{"relative_error", 1e-5}},
                 &suite_magnetic_moyal_reduction});
    v.push_back({"quantizer_axioms", "Hermiticity, completeness round trip and trace axiom", 3,
                 {{"hbar", 0.1}, {"kernels", 5}, {"trace_hbar", 0.3}, {"trace_nodes", 40}},
                 {{"hermiticity_quantizer", 1e-10},
                  {"hermiticity_kernel", 1e-8},
                  {"completeness", 1e-5},
                  {"trace_axiom", 1e-4}},
                 &suite_quantizer_axioms});
    v.push_back({"sigma_reflections", "sigma_x is a symplectic, gauge-independent involution fixing x", 4,
                 {{"samples", 100}, {"gauge_base_point", {0.4, -0.3}}},
                 {{"involution", 1e-7}, {"fixed_point", 1e-7}, {"symplectic", 1e-7}, {"gauge_independence", 1e-7}},
                 &suite_sigma_reflections});
    v.push_back({"connection_routes", "connection from sigma second differences against the explicit symbols", 5,
                 {{"points", 20}}, {{"order_min", 1.8}, {"order_max", 2.2}, {"finest_error", 1e-4}},
                 &suite_connection_routes});
    v.push_back({"ricci_check", "Ricci tensor of the connection is (2/3) diag(base Ricci, 0)", 6,
                 {{"points", 10}}, {{"ricci", 1e-6}}, &suite_ricci_check});
    v.push_back({"symplectic_connection", "the connection preserves the magnetic symplectic form", 7,
                 {{"points", 100}}, {{"nabla_omega", 1e-8}}, &suite_symplectic_connection});
    v.push_back({"hbar_expansion", "fitted residual orders of the first- and second-order hbar expansion", 8,
                 {{"hbar_sweep", {0.2, 0.1, 0.05, 0.025}},
                  {"centre_f", {0.2, -0.1, 0.3, 0.0}},
                  {"centre_g", {-0.2, 0.1, -0.2, 0.2}},
                  {"ricci_coefficient", 3.0},
                  {"alternative_ricci_coefficient", 1.0}},
                 {{"o1_min", 1.9}, {"o1_max", 2.1}, {"o2_min", 2.8}, {"o2_max", 3.2}},
                 &suite_hbar_expansion});
    v.push_back({"front_map", "front of the product kernel on the hyperboloid against the determinant criterion", 9,
                 {{"nodes", 40}, {"half_width", 3.0}, {"band", 2}, {"y", {-0.5, 0.0}}, {"z", {0.5, 0.0}},
                  {"hbar", 0.2}},
                 {}, &suite_front_map});
    v.push_back({"associativity", "cocycle identity on chains and associativity of the groupoid convolution", 10,
                 {{"chains", 100}, {"hbar", 0.2}, {"symbol_triples", 5}, {"symbol_hbar", 0.3}},
                 {{"cocycle_identity", 1e-8}, {"convolution_associativity", 1e-4}}, &suite_associativity});
    v.push_back({"membrane_phase", "algebraic and geometric membrane phases agree", 11, {{"triples", 50}},
                 {{"algebraic_vs_geometric", 1e-6}}, &suite_membrane_phase});
    v.push_back({"maxwell_identities", "duality, cyclic, coupling-curvature and continuity identities", 12,
                 {{"points", 20}},
                 {{"duality", 1e-12},
                  {"cyclic", 1e-12},
                  {"coupling_curvature", 1e-9},
                  {"continuity", 1e-6},
                  {"kappa_exact", 1e-6}},
                 &suite_maxwell_identities});
    v.push_back({"permutation_formulas", "intertwining of T, E, sigma and flow operators with P1 symbols", 13,
                 {{"grids", {64, 128}}, {"hbar", 0.1}}, {{"residual", 1e-4}}, &suite_permutation_formulas});
    return v;
  }();
  return reg;
}

const SuiteInfo* find_suite(const std::string& name) {
  for (const auto& s : suite_registry())
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace mgq
