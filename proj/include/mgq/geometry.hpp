#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mgq/types.hpp"

namespace mgq {

enum class BaseKind { euclidean, hyperboloid_h2, deformed_r2, custom };
enum class FieldKind { zero, constant, area_form, quadratic };
// Which geodesic engine serves a model. Closed forms are used where they exist;
// `ode` is the generic variational Runge-Kutta engine.
enum class GeodesicKind { ode, flat, hyperboloid };

struct FieldSpec {
  FieldKind kind = FieldKind::zero;
  double B = 0.0;
  // quadratic: F_12 = c0 + c1 q1 + c2 q2 + c3 q1^2 + c4 q1 q2 + c5 q2^2.
  // area_form: optional modulation, F_12 = mu(q) (B + same polynomial).
  std::vector<double> coeffs;
};

struct ModelSpec {
  BaseKind base = BaseKind::euclidean;
  int n = 2;                 // euclidean only
  double amplitude = 0.3;    // deformed_r2 bump height
  double width = 1.0;        // deformed_r2 bump width
  FieldSpec field;
  std::optional<Vec> base_point;
};

std::string to_string(BaseKind k);
std::string to_string(FieldKind k);
BaseKind parse_base_kind(const std::string& s);
FieldKind parse_field_kind(const std::string& s);

// Pointwise data of a model: connection, measure density and Faraday tensor,
// together with their first and second chart derivatives.
// Index conventions: G(s,i,j) = Gamma^s_ij, dG(l,s,i,j) = d_l Gamma^s_ij,
// d2G(k,l,s,i,j) = d_k d_l Gamma^s_ij, F(j,k), dF(l,j,k) = d_l F_jk,
// d2F(k,l,j,k') = d_k d_l F_jk'.
class FieldProvider {
 public:
  virtual ~FieldProvider() = default;
  virtual int dim() const = 0;
  virtual T3 christoffel(const Vec& q) const = 0;
  virtual void christoffel_with_d1(const Vec& q, T3& G, T4& dG) const;
  virtual T4 christoffel_d1(const Vec& q) const;
  virtual T5 christoffel_d2(const Vec& q) const;
  virtual double density(const Vec& q) const = 0;
  virtual Vec density_grad(const Vec& q) const;
  virtual T2 faraday(const Vec& q) const = 0;
  virtual T3 faraday_d1(const Vec& q) const;
  virtual T4 faraday_d2(const Vec& q) const;
  virtual bool has_metric() const { return false; }
  virtual Mat metric(const Vec& q) const;
  virtual bool analytic_derivatives() const { return false; }
};

struct ChartBox {
  Vec lo;
  Vec hi;
  bool contains(const Vec& q) const;
};

class ManifoldModel {
 public:
  int dim = 0;
  std::string name;
  std::string chart_description;
  ModelSpec spec;
  ChartBox chart;
  Vec base_point;
  GeodesicKind geodesic_kind = GeodesicKind::ode;
  std::shared_ptr<const FieldProvider> fields;

  T3 christoffel(const Vec& q) const { return fields->christoffel(q); }
  double density(const Vec& q) const { return fields->density(q); }
  T2 faraday(const Vec& q) const { return fields->faraday(q); }
  Mat faraday_matrix(const Vec& q) const;
  bool has_metric() const { return fields->has_metric(); }
  Mat metric(const Vec& q) const { return fields->metric(q); }
  bool field_is_zero() const;
  bool in_chart(const Vec& q) const { return chart.contains(q); }
  void require_in_chart(const Vec& q, const char* what) const;

  ManifoldModel with_base_point(const Vec& o) const;
  // Same model served by the generic ODE geodesic engine (used to test closed forms).
  ManifoldModel with_numeric_geodesics() const;
};

ManifoldModel builtin_model(const ModelSpec& spec);

// Programmatic custom models; derivatives come from central finite differences.
struct CustomModelDef {
  int dim = 2;
  std::string name = "custom";
  std::function<T3(const Vec&)> christoffel;
  std::function<double(const Vec&)> density;
  std::function<T2(const Vec&)> faraday;
  std::function<Mat(const Vec&)> metric;  // optional
  Vec lo, hi;
  std::optional<Vec> base_point;
};
ManifoldModel custom_model(const CustomModelDef& def);

struct BaseCurvature {
  T4 riemann;     // R(s,i,j,k) = R^s_ijk
  T2 ricci_sym;   // symmetric part of R^k_lks
  T3 nabla_F;     // nabla_F(j,k,l) = F_[jk]l = nabla_l F_jk
  T3 coupling;    // C(j,k,l) = F_j{kl}
};

BaseCurvature curvature_at(const ManifoldModel& m, const Vec& q);

// Riemann tensor from Gamma and its first derivatives.
T4 riemann_from(const T3& G, const T4& dG);
// Covariant derivative of the curvature: out(s,i,j,k,m) = nabla_m R^s_ijk.
T5 nabla_riemann(const ManifoldModel& m, const Vec& q);
// nabla_F(j,k,l) = nabla_l F_jk.
T3 nabla_faraday(const T3& G, const T2& F, const T3& dF);
// Second covariant derivative: out(j,k,l,m) = nabla_m nabla_l F_jk.
T4 nabla2_faraday(const ManifoldModel& m, const Vec& q);
// Coupling C_jkl = (1/3)(nabla_k F_jl + nabla_l F_jk).
T3 coupling_from(const T3& nablaF);

struct CouplingReport {
  double duality = 0.0;
  double inverse_duality = 0.0;
  double cyclic_coupling = 0.0;
  double cyclic_nabla = 0.0;
  double max() const;
};
CouplingReport coupling_identities(const BaseCurvature& bc);

struct ModelInvariantReport {
  double torsion = 0.0;
  double skew = 0.0;
  double closedness = 0.0;
  double min_density = 0.0;
  double metric_compatibility = 0.0;  // |nabla g|, metric models only
};
ModelInvariantReport model_invariants(const ManifoldModel& m, const Vec& q);

// Central finite-difference step for first derivatives.
inline double fd_step(const Vec& q) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, q.norm());
}

}  // namespace mgq
