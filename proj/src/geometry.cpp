#include "mgq/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mgq/detail/autodiff.hpp"

namespace mgq {

namespace {

using detail::AD1;
using detail::AD2;

// Closed-form fields of the builtin models, generic in the scalar type so that
// derivatives come from forward-mode differentiation.
struct BuiltinImpl {
  BaseKind base;
  FieldSpec field;
  int n;
  double amplitude;
  double width;

  template <class T>
  T poly(const T* q) const {
    const auto& c = field.coeffs;
    auto co = [&](size_t i) { return i < c.size() ? c[i] : 0.0; };
    return co(0) + co(1) * q[0] + co(2) * q[1] + co(3) * q[0] * q[0] + co(4) * q[0] * q[1] +
           co(5) * q[1] * q[1];
  }

  // Graph-of-bump helpers for deformed_r2: h = A exp(-|q|^2 / (2 w^2)).
  template <class T>
  void bump(const T* q, T& h, T* hx, T* hxx) const {
    const double w2 = width * width;
    h = amplitude * exp(-(q[0] * q[0] + q[1] * q[1]) / (2.0 * w2));
    for (int i = 0; i < 2; ++i) hx[i] = -q[i] / w2 * h;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        hxx[2 * i + j] = (q[i] * q[j] / (w2 * w2) - (i == j ? 1.0 / w2 : 0.0)) * h;
  }

  template <class T>
  void gamma(const T* q, T* G) const {
    for (int i = 0; i < n * n * n; ++i) G[i] = T(0.0);
    if (base == BaseKind::hyperboloid_h2) {
      T w = 1.0 + q[0] * q[0] + q[1] * q[1];
      for (int s = 0; s < 2; ++s)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            T g = (i == j ? 1.0 : 0.0) - q[i] * q[j] / w;
            G[(s * 2 + i) * 2 + j] = -q[s] * g;
          }
    } else if (base == BaseKind::deformed_r2) {
      T h, hx[2], hxx[4];
      bump(q, h, hx, hxx);
      T den = 1.0 + hx[0] * hx[0] + hx[1] * hx[1];
      for (int s = 0; s < 2; ++s)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) G[(s * 2 + i) * 2 + j] = hx[s] * hxx[2 * i + j] / den;
    }
  }

  template <class T>
  T density(const T* q) const {
    if (base == BaseKind::hyperboloid_h2) return 1.0 / sqrt(1.0 + q[0] * q[0] + q[1] * q[1]);
    if (base == BaseKind::deformed_r2) {
      T h, hx[2], hxx[4];
      bump(q, h, hx, hxx);
      return sqrt(1.0 + hx[0] * hx[0] + hx[1] * hx[1]);
    }
    return T(1.0);
  }

  template <class T>
  void faraday(const T* q, T* F) const {
    for (int i = 0; i < n * n; ++i) F[i] = T(0.0);
    if (n < 2) return;
    T f12(0.0);
    switch (field.kind) {
      case FieldKind::zero:
        return;
      case FieldKind::constant:
        f12 = T(field.B);
        break;
      case FieldKind::area_form:
        f12 = density(q) * (field.B + poly(q));
        break;
      case FieldKind::quadratic:
        f12 = poly(q);
        break;
    }
    F[0 * n + 1] = f12;
    F[1 * n + 0] = -f12;
  }

  template <class T>
  void metric(const T* q, T* g) const {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g[i * n + j] = T(i == j ? 1.0 : 0.0);
    if (base == BaseKind::hyperboloid_h2) {
      T w = 1.0 + q[0] * q[0] + q[1] * q[1];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) g[i * 2 + j] -= q[i] * q[j] / w;
    } else if (base == BaseKind::deformed_r2) {
      T h, hx[2], hxx[4];
      bump(q, h, hx, hxx);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) g[i * 2 + j] += hx[i] * hx[j];
    }
  }
};

template <int N>
class AnalyticFields final : public FieldProvider {
 public:
  explicit AnalyticFields(BuiltinImpl impl) : impl_(std::move(impl)) {}

  int dim() const override { return N; }
  bool analytic_derivatives() const override { return true; }
  bool has_metric() const override { return true; }

  T3 christoffel(const Vec& q) const override {
    double G[N * N * N];
    impl_.gamma(q.data(), G);
    T3 out(N);
    for (int s = 0; s < N; ++s)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) out(s, i, j) = G[(s * N + i) * N + j];
    return out;
  }

  void christoffel_with_d1(const Vec& q, T3& Gout, T4& dG) const override {
    AD1<N> x[N];
    for (int i = 0; i < N; ++i) x[i] = detail::seed1<N>(q[i], i);
    AD1<N> G[N * N * N];
    impl_.gamma(x, G);
    Gout = T3(N);
    dG = T4(N);
    for (int s = 0; s < N; ++s)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const auto& g = G[(s * N + i) * N + j];
          Gout(s, i, j) = g.value();
          for (int l = 0; l < N; ++l) dG(l, s, i, j) = g.derivatives()(l);
        }
  }

  T4 christoffel_d1(const Vec& q) const override {
    T3 G;
    T4 dG;
    christoffel_with_d1(q, G, dG);
    return dG;
  }

  T5 christoffel_d2(const Vec& q) const override {
    AD2<N> x[N];
    for (int i = 0; i < N; ++i) x[i] = detail::seed2<N>(q[i], i);
    AD2<N> G[N * N * N];
    impl_.gamma(x, G);
    T5 out(N);
    for (int s = 0; s < N; ++s)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const auto& g = G[(s * N + i) * N + j];
          for (int k = 0; k < N; ++k)
            for (int l = 0; l < N; ++l) out(k, l, s, i, j) = g.derivatives()(l).derivatives()(k);
        }
    return out;
  }

  double density(const Vec& q) const override { return impl_.density(q.data()); }

  Vec density_grad(const Vec& q) const override {
    AD1<N> x[N];
    for (int i = 0; i < N; ++i) x[i] = detail::seed1<N>(q[i], i);
    AD1<N> mu = impl_.density(x);
    Vec out(N);
    for (int i = 0; i < N; ++i) out[i] = mu.derivatives()(i);
    return out;
  }

  T2 faraday(const Vec& q) const override {
    double F[N * N];
    impl_.faraday(q.data(), F);
    T2 out(N);
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) out(j, k) = F[j * N + k];
    return out;
  }

  T3 faraday_d1(const Vec& q) const override {
    AD1<N> x[N];
    for (int i = 0; i < N; ++i) x[i] = detail::seed1<N>(q[i], i);
    AD1<N> F[N * N];
    impl_.faraday(x, F);
    T3 out(N);
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) out(l, j, k) = F[j * N + k].derivatives()(l);
    return out;
  }

  T4 faraday_d2(const Vec& q) const override {
    AD2<N> x[N];
    for (int i = 0; i < N; ++i) x[i] = detail::seed2<N>(q[i], i);
    AD2<N> F[N * N];
    impl_.faraday(x, F);
    T4 out(N);
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b)
            out(a, b, j, k) = F[j * N + k].derivatives()(b).derivatives()(a);
    return out;
  }

  Mat metric(const Vec& q) const override {
    double g[N * N];
    impl_.metric(q.data(), g);
    Mat out(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) out(i, j) = g[i * N + j];
    return out;
  }

 private:
  BuiltinImpl impl_;
};

class CustomFields final : public FieldProvider {
 public:
  explicit CustomFields(CustomModelDef def) : def_(std::move(def)) {}
  int dim() const override { return def_.dim; }
  T3 christoffel(const Vec& q) const override { return def_.christoffel(q); }
  double density(const Vec& q) const override { return def_.density(q); }
  T2 faraday(const Vec& q) const override { return def_.faraday(q); }
  bool has_metric() const override { return static_cast<bool>(def_.metric); }
  Mat metric(const Vec& q) const override {
    if (!def_.metric) throw ModelError("model '" + def_.name + "' has no metric");
    return def_.metric(q);
  }

 private:
  CustomModelDef def_;
};

std::shared_ptr<const FieldProvider> make_analytic(const BuiltinImpl& impl) {
  switch (impl.n) {
    case 1:
      return std::make_shared<AnalyticFields<1>>(impl);
    case 2:
      return std::make_shared<AnalyticFields<2>>(impl);
    case 3:
      return std::make_shared<AnalyticFields<3>>(impl);
  }
  throw ModelError("euclidean dimension must be 1, 2 or 3");
}

// Second-derivative step, balancing truncation h^2 against roundoff eps/h^2.
double fd_step2(const Vec& q) {
  return std::pow(std::numeric_limits<double>::epsilon(), 0.25) * std::max(1.0, q.norm());
}

}  // namespace

// ---- FieldProvider finite-difference defaults ----

void FieldProvider::christoffel_with_d1(const Vec& q, T3& G, T4& dG) const {
  G = christoffel(q);
  dG = christoffel_d1(q);
}

T4 FieldProvider::christoffel_d1(const Vec& q) const {
  const int n = dim();
  const double h = fd_step(q);
  T4 out(n);
  for (int l = 0; l < n; ++l) {
    Vec qp = q, qm = q;
    qp[l] += h;
    qm[l] -= h;
    T3 gp = christoffel(qp), gm = christoffel(qm);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(l, s, i, j) = (gp(s, i, j) - gm(s, i, j)) / (2 * h);
  }
  return out;
}

T5 FieldProvider::christoffel_d2(const Vec& q) const {
  const int n = dim();
  const double h = fd_step2(q);
  T5 out(n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Vec qpp = q, qpm = q, qmp = q, qmm = q;
      qpp[k] += h, qpp[l] += h;
      qpm[k] += h, qpm[l] -= h;
      qmp[k] -= h, qmp[l] += h;
      qmm[k] -= h, qmm[l] -= h;
      T3 a = christoffel(qpp), b = christoffel(qpm), c = christoffel(qmp), d = christoffel(qmm);
      for (int s = 0; s < n; ++s)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            out(k, l, s, i, j) = (a(s, i, j) - b(s, i, j) - c(s, i, j) + d(s, i, j)) / (4 * h * h);
    }
  return out;
}

Vec FieldProvider::density_grad(const Vec& q) const {
  const int n = dim();
  const double h = fd_step(q);
  Vec out(n);
  for (int l = 0; l < n; ++l) {
    Vec qp = q, qm = q;
    qp[l] += h;
    qm[l] -= h;
    out[l] = (density(qp) - density(qm)) / (2 * h);
  }
  return out;
}

T3 FieldProvider::faraday_d1(const Vec& q) const {
  const int n = dim();
  const double h = fd_step(q);
  T3 out(n);
  for (int l = 0; l < n; ++l) {
    Vec qp = q, qm = q;
    qp[l] += h;
    qm[l] -= h;
    T2 fp = faraday(qp), fm = faraday(qm);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out(l, j, k) = (fp(j, k) - fm(j, k)) / (2 * h);
  }
  return out;
}

T4 FieldProvider::faraday_d2(const Vec& q) const {
  const int n = dim();
  const double h = fd_step2(q);
  T4 out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Vec qpp = q, qpm = q, qmp = q, qmm = q;
      qpp[a] += h, qpp[b] += h;
      qpm[a] += h, qpm[b] -= h;
      qmp[a] -= h, qmp[b] += h;
      qmm[a] -= h, qmm[b] -= h;
      T2 A = faraday(qpp), B = faraday(qpm), C = faraday(qmp), D = faraday(qmm);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out(a, b, j, k) = (A(j, k) - B(j, k) - C(j, k) + D(j, k)) / (4 * h * h);
    }
  return out;
}

Mat FieldProvider::metric(const Vec&) const { throw ModelError("model has no metric"); }

// ---- names ----

std::string to_string(BaseKind k) {
  switch (k) {
    case BaseKind::euclidean:
      return "euclidean";
    case BaseKind::hyperboloid_h2:
      return "hyperboloid_h2";
    case BaseKind::deformed_r2:
      return "deformed_r2";
    case BaseKind::custom:
      return "custom";
  }
  return "?";
}

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::zero:
      return "zero";
    case FieldKind::constant:
      return "constant";
    case FieldKind::area_form:
      return "area_form";
    case FieldKind::quadratic:
      return "quadratic";
  }
  return "?";
}

BaseKind parse_base_kind(const std::string& s) {
  if (s == "euclidean") return BaseKind::euclidean;
  if (s == "hyperboloid_h2") return BaseKind::hyperboloid_h2;
  if (s == "deformed_r2") return BaseKind::deformed_r2;
  throw ModelError("unknown model name '" + s + "'");
}

FieldKind parse_field_kind(const std::string& s) {
  if (s == "zero") return FieldKind::zero;
  if (s == "constant") return FieldKind::constant;
  if (s == "area_form") return FieldKind::area_form;
  if (s == "quadratic") return FieldKind::quadratic;
  throw ModelError("unknown field type '" + s + "'");
}

// ---- ChartBox / ManifoldModel ----

bool ChartBox::contains(const Vec& q) const {
  if (q.size() != lo.size()) return false;
  for (int i = 0; i < q.size(); ++i)
    if (!(q[i] > lo[i] && q[i] < hi[i])) return false;
  return true;
}

Mat ManifoldModel::faraday_matrix(const Vec& q) const {
  T2 F = faraday(q);
  Mat out(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int k = 0; k < dim; ++k) out(j, k) = F(j, k);
  return out;
}

bool ManifoldModel::field_is_zero() const {
  if (spec.base == BaseKind::custom) return false;
  const auto& f = spec.field;
  if (f.kind == FieldKind::zero) return true;
  bool coeffs_zero = true;
  for (double c : f.coeffs) coeffs_zero = coeffs_zero && c == 0.0;
  if (f.kind == FieldKind::quadratic) return coeffs_zero;
  return f.B == 0.0 && coeffs_zero;
}

void ManifoldModel::require_in_chart(const Vec& q, const char* what) const {
  if (!in_chart(q)) {
    std::ostringstream os;
    os << what << ": point (" << q.transpose() << ") outside chart of " << name;
    throw NumericalError(os.str());
  }
}

ManifoldModel ManifoldModel::with_base_point(const Vec& o) const {
  if (!in_chart(o)) throw ModelError("base point outside chart");
  ManifoldModel m = *this;
  m.base_point = o;
  m.spec.base_point = o;
  return m;
}

ManifoldModel ManifoldModel::with_numeric_geodesics() const {
  ManifoldModel m = *this;
  m.geodesic_kind = GeodesicKind::ode;
  return m;
}

ManifoldModel builtin_model(const ModelSpec& spec) {
  BuiltinImpl impl{spec.base, spec.field, 2, spec.amplitude, spec.width};
  ManifoldModel m;
  m.spec = spec;
  double half = 50.0;
  switch (spec.base) {
    case BaseKind::euclidean:
      if (spec.n < 1 || spec.n > 3) throw ModelError("euclidean dimension must be 1, 2 or 3");
      impl.n = spec.n;
      m.geodesic_kind = GeodesicKind::flat;
      m.chart_description = "cartesian coordinates";
      break;
    case BaseKind::hyperboloid_h2:
      m.geodesic_kind = GeodesicKind::hyperboloid;
      m.chart_description = "graph chart (q1,q2) -> (q1, q2, sqrt(1+q1^2+q2^2)) on the upper sheet";
      half = 12.0;
      break;
    case BaseKind::deformed_r2:
      if (!(spec.amplitude >= 0.0 && spec.amplitude <= 1.0))
        throw ModelError("deformed_r2 amplitude must lie in [0, 1]");
      if (!(spec.width >= 0.3 && spec.width <= 10.0))
        throw ModelError("deformed_r2 width must lie in [0.3, 10]");
      m.geodesic_kind = GeodesicKind::ode;
      m.chart_description = "graph chart of a Gaussian bump z = A exp(-|q|^2 / (2 w^2))";
      break;
    case BaseKind::custom:
      throw ModelError("custom models are built with custom_model()");
  }
  const auto& f = spec.field;
  if (f.kind == FieldKind::area_form && spec.base == BaseKind::euclidean)
    throw ModelError("field area_form requires hyperboloid_h2 or deformed_r2");
  if (impl.n == 1 && f.kind != FieldKind::zero)
    throw ModelError("a 2-form on a 1-dimensional manifold vanishes; use field zero");
  if (f.kind == FieldKind::quadratic && impl.n != 2)
    throw ModelError("field quadratic is defined for 2-dimensional models only");
  if (f.coeffs.size() > 6) throw ModelError("field coeffs: at most 6 polynomial coefficients");
  if (f.kind == FieldKind::constant && !f.coeffs.empty())
    throw ModelError("field constant takes no coeffs");
  for (double c : f.coeffs)
    if (!std::isfinite(c)) throw ModelError("field coeffs must be finite");
  if (!std::isfinite(f.B)) throw ModelError("field B must be finite");

  m.dim = impl.n;
  m.name = to_string(spec.base);
  m.fields = make_analytic(impl);
  m.chart.lo = Vec::Constant(m.dim, -half);
  m.chart.hi = Vec::Constant(m.dim, half);
  m.base_point = spec.base_point ? *spec.base_point : Vec::Zero(m.dim);
  if (m.base_point.size() != m.dim) throw ModelError("base point has wrong dimension");
  if (!m.in_chart(m.base_point)) throw ModelError("base point outside chart");
  m.spec.base_point = m.base_point;
  return m;
}

ManifoldModel custom_model(const CustomModelDef& def) {
  if (def.dim < 1 || def.dim > kMaxDim) throw ModelError("custom model dimension out of range");
  if (!def.christoffel || !def.density || !def.faraday)
    throw ModelError("custom model needs christoffel, density and faraday closures");
  ManifoldModel m;
  m.dim = def.dim;
  m.name = def.name;
  m.chart_description = "user chart";
  m.spec.base = BaseKind::custom;
  m.spec.n = def.dim;
  m.chart.lo = def.lo.size() == def.dim ? def.lo : Vec::Constant(def.dim, -10.0);
  m.chart.hi = def.hi.size() == def.dim ? def.hi : Vec::Constant(def.dim, 10.0);
  m.base_point = def.base_point ? *def.base_point : Vec::Zero(def.dim);
  m.geodesic_kind = GeodesicKind::ode;
  m.fields = std::make_shared<CustomFields>(def);
  return m;
}

// ---- tensor calculus ----

T4 riemann_from(const T3& G, const T4& dG) {
  const int n = G.dim();
  T4 R(n);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = dG(j, s, i, k) - dG(k, s, i, j);
          for (int m = 0; m < n; ++m) v += G(s, j, m) * G(m, i, k) - G(s, k, m) * G(m, i, j);
          R(s, i, j, k) = v;
        }
  return R;
}

T3 nabla_faraday(const T3& G, const T2& F, const T3& dF) {
  const int n = G.dim();
  T3 out(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double v = dF(l, j, k);
        for (int m = 0; m < n; ++m) v -= G(m, l, j) * F(m, k) + G(m, l, k) * F(j, m);
        out(j, k, l) = v;
      }
  return out;
}

T3 coupling_from(const T3& nF) {
  const int n = nF.dim();
  T3 C(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) C(j, k, l) = (nF(j, l, k) + nF(j, k, l)) / 3.0;
  return C;
}

BaseCurvature curvature_at(const ManifoldModel& m, const Vec& q) {
  m.require_in_chart(q, "curvature_at");
  const int n = m.dim;
  BaseCurvature bc;
  T3 G;
  T4 dG;
  m.fields->christoffel_with_d1(q, G, dG);
  bc.riemann = riemann_from(G, dG);
  bc.ricci_sym = T2(n);
  for (int l = 0; l < n; ++l)
    for (int s = 0; s < n; ++s) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += bc.riemann(k, l, k, s) + bc.riemann(k, s, k, l);
      bc.ricci_sym(l, s) = 0.5 * v;
    }
  bc.nabla_F = nabla_faraday(G, m.faraday(q), m.fields->faraday_d1(q));
  bc.coupling = coupling_from(bc.nabla_F);
  bool finite = true;
  bc.riemann.for_each_index([&](const std::array<int, 4>& ix) {
    finite = finite && std::isfinite(bc.riemann.at(ix));
  });
  if (!finite) throw NumericalError("curvature_at: non-finite derivatives");
  return bc;
}

T5 nabla_riemann(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  T3 G;
  T4 dG;
  m.fields->christoffel_with_d1(q, G, dG);
  T5 d2G = m.fields->christoffel_d2(q);
  T4 R = riemann_from(G, dG);
  T5 out(n);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int mm = 0; mm < n; ++mm) {
            // d_m R^s_ijk
            double v = d2G(mm, j, s, i, k) - d2G(mm, k, s, i, j);
            for (int r = 0; r < n; ++r)
              v += dG(mm, s, j, r) * G(r, i, k) + G(s, j, r) * dG(mm, r, i, k) -
                   dG(mm, s, k, r) * G(r, i, j) - G(s, k, r) * dG(mm, r, i, j);
            for (int r = 0; r < n; ++r)
              v += G(s, mm, r) * R(r, i, j, k) - G(r, mm, i) * R(s, r, j, k) -
                   G(r, mm, j) * R(s, i, r, k) - G(r, mm, k) * R(s, i, j, r);
            out(s, i, j, k, mm) = v;
          }
  return out;
}

T4 nabla2_faraday(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  T3 G;
  T4 dG;
  m.fields->christoffel_with_d1(q, G, dG);
  T2 F = m.faraday(q);
  T3 dF = m.fields->faraday_d1(q);
  T4 d2F = m.fields->faraday_d2(q);
  T3 nF = nabla_faraday(G, F, dF);
  T4 out(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int mm = 0; mm < n; ++mm) {
          // d_m of nF(j,k,l) = d_l F_jk - G^r_lj F_rk - G^r_lk F_jr
          double v = d2F(mm, l, j, k);
          for (int r = 0; r < n; ++r)
            v -= dG(mm, r, l, j) * F(r, k) + G(r, l, j) * dF(mm, r, k) + dG(mm, r, l, k) * F(j, r) +
                 G(r, l, k) * dF(mm, j, r);
          for (int r = 0; r < n; ++r)
            v -= G(r, mm, j) * nF(r, k, l) + G(r, mm, k) * nF(j, r, l) + G(r, mm, l) * nF(j, k, r);
          out(j, k, l, mm) = v;
        }
  return out;
}

double CouplingReport::max() const {
  return std::max(std::max(duality, inverse_duality), std::max(cyclic_coupling, cyclic_nabla));
}

CouplingReport coupling_identities(const BaseCurvature& bc) {
  const T3& C = bc.coupling;
  const T3& N = bc.nabla_F;
  const int n = C.dim();
  CouplingReport r;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        r.duality = std::max(r.duality, std::abs(C(j, k, l) - (N(j, k, l) + N(j, l, k)) / 3.0));
        r.inverse_duality =
            std::max(r.inverse_duality, std::abs(N(j, k, l) - (C(j, k, l) - C(k, j, l))));
        r.cyclic_coupling =
            std::max(r.cyclic_coupling, std::abs(C(j, k, l) + C(k, l, j) + C(l, j, k)));
        r.cyclic_nabla = std::max(r.cyclic_nabla, std::abs(N(j, k, l) + N(k, l, j) + N(l, j, k)));
      }
  return r;
}

ModelInvariantReport model_invariants(const ManifoldModel& m, const Vec& q) {
  const int n = m.dim;
  ModelInvariantReport r;
  T3 G = m.christoffel(q);
  T2 F = m.faraday(q);
  T3 dF = m.fields->faraday_d1(q);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.torsion = std::max(r.torsion, std::abs(G(s, i, j) - G(s, j, i)));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      r.skew = std::max(r.skew, std::abs(F(j, k) + F(k, j)));
      for (int l = 0; l < n; ++l)
        r.closedness =
            std::max(r.closedness, std::abs(dF(j, k, l) + dF(k, l, j) + dF(l, j, k)));
    }
  r.min_density = m.density(q);
  if (m.has_metric()) {
    // nabla_l g_ij = d_l g_ij - G^r_li g_rj - G^r_lj g_ir, with d_l g by central differences.
    const double h = fd_step(q);
    Mat g = m.metric(q);
    for (int l = 0; l < n; ++l) {
      Vec qp = q, qm = q;
      qp[l] += h;
      qm[l] -= h;
      Mat dg = (m.metric(qp) - m.metric(qm)) / (2 * h);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = dg(i, j);
          for (int rr = 0; rr < n; ++rr) v -= G(rr, l, i) * g(rr, j) + G(rr, l, j) * g(i, rr);
          r.metric_compatibility = std::max(r.metric_compatibility, std::abs(v));
        }
    }
  }
  return r;
}

}  // namespace mgq
