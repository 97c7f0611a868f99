#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgq/geometry.hpp"

namespace mgq {

// One named experiment suite per acceptance criterion. A suite runs a fixed battery of checks
// and reports, for each, the measured worst value against its tolerance.

struct SuiteConfig {
  std::uint64_t seed = 1;
  // Replaces the suite's default model list when set.
  std::optional<ModelSpec> model;
  // Suite knobs (sample counts, grids, hbar sweep); defaults come from the registry entry.
  nlohmann::json params = nlohmann::json::object();
  std::map<std::string, double> tolerances;
  int workers = 1;
  int verbosity = 0;

  double tol(const std::string& name) const;
  template <class T>
  T param(const std::string& name) const {
    return params.at(name).get<T>();
  }
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // the measured quantity the tolerance applies to
  double tolerance = 0.0;  // 0 when the check is a predicate
  nlohmann::json measured = nlohmann::json::object();
  std::string detail;
};

struct Artifact {
  std::string filename;
  std::string contents;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<Artifact> artifacts;
  bool pass() const;
};

using SuiteFn = SuiteResult (*)(const SuiteConfig&);

struct SuiteInfo {
  std::string name;
  std::string description;
  int criterion = 0;
  nlohmann::json default_params;
  std::map<std::string, double> default_tolerances;
  SuiteFn run = nullptr;

  // Defaults merged with the given overrides; throws ModelError naming an unknown or
  // ill-typed key.
  SuiteConfig configure(std::uint64_t seed, const nlohmann::json& params,
                        const std::map<std::string, double>& tolerances) const;
};

const std::vector<SuiteInfo>& suite_registry();
const SuiteInfo* find_suite(const std::string& name);

// Individual suites.
SuiteResult suite_moyal_reduction(const SuiteConfig& c);
SuiteResult suite_magnetic_moyal_reduction(const SuiteConfig& c);
SuiteResult suite_quantizer_axioms(const SuiteConfig& c);
SuiteResult suite_sigma_reflections(const SuiteConfig& c);
SuiteResult suite_connection_routes(const SuiteConfig& c);
SuiteResult suite_ricci_check(const SuiteConfig& c);
SuiteResult suite_symplectic_connection(const SuiteConfig& c);
SuiteResult suite_hbar_expansion(const SuiteConfig& c);
SuiteResult suite_front_map(const SuiteConfig& c);
SuiteResult suite_associativity(const SuiteConfig& c);
SuiteResult suite_membrane_phase(const SuiteConfig& c);
SuiteResult suite_maxwell_identities(const SuiteConfig& c);
SuiteResult suite_permutation_formulas(const SuiteConfig& c);

// Model specs as JSON objects: {"base": ..., "n": ..., "amplitude": ..., "width": ...,
// "field": {"kind": ..., "B": ..., "coeffs": [...]}, "base_point": [...]}.
nlohmann::json model_to_json(const ModelSpec& s);
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace mgq
