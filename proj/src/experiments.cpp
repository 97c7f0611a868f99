#include "mgq/experiments.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mgq {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// YAML scalars become numbers where they parse as such; quoted scalars stay strings.
json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& e : n) a.push_back(yaml_to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.Scalar();
      if (n.Tag() == "!") return s;
      if (s == "true" || s == "false") return s == "true";
      if (s == "null" || s == "~") return nullptr;
      long long i = 0;
      if (YAML::convert<long long>::decode(n, i) && s.find_first_of(".eE") == std::string::npos) return i;
      double d = 0;
      if (YAML::convert<double>::decode(n, d)) return d;
      return s;
    }
  }
  return nullptr;
}

std::string names_list() {
  std::string s;
  for (const auto& info : suite_registry()) s += (s.empty() ? "" : ", ") + info.name;
  return s;
}

int get_int(const json& j, const char* key) {
  if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
  return j[key].get<int>();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("output_dir: cannot write " + p.string());
  os << text;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: not valid YAML: ") + e.what());
  }
  json j = yaml_to_json(root);
  if (!j.is_object()) throw ConfigError("config: expected a mapping at the top level");
  static const std::vector<std::string> keys{"experiment", "seed",    "model",   "params",
                                             "tolerances", "output_dir", "workers", "verbosity"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(k + ": unknown key");

  ExperimentConfig c;
  if (!j.contains("experiment") || !j["experiment"].is_string())
    throw ConfigError("experiment: required, one of " + names_list());
  c.experiment = j["experiment"].get<std::string>();
  if (!j.contains("seed")) throw ConfigError("seed: required");
  if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
    throw ConfigError("seed: expected a non-negative integer");
  c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("model") && !j["model"].is_null()) {
    try {
      c.model = model_from_json(j["model"]);
    } catch (const ModelError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("params") && !j["params"].is_null()) {
    if (!j["params"].is_object()) throw ConfigError("params: expected a mapping");
    c.params = j["params"];
  }
  if (j.contains("tolerances") && !j["tolerances"].is_null()) {
    if (!j["tolerances"].is_object()) throw ConfigError("tolerances: expected a mapping");
    for (const auto& [k, v] : j["tolerances"].items()) {
      if (!v.is_number()) throw ConfigError("tolerances." + k + ": expected a number");
      c.tolerances[k] = v.get<double>();
    }
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: expected a path");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("workers")) c.workers = get_int(j, "workers");
  if (c.workers < 1) throw ConfigError("workers: must be at least 1");
  if (j.contains("verbosity")) c.verbosity = get_int(j, "verbosity");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"experiment", c.experiment}, {"seed", c.seed}, {"workers", c.workers}, {"verbosity", c.verbosity}};
  j["model"] = c.model ? model_to_json(*c.model) : json(nullptr);
  j["params"] = c.params;
  j["tolerances"] = c.tolerances;
  j["output_dir"] = c.output_dir;
  return j;
}

std::string resolve_output_dir(const ExperimentConfig& c, const RunOverrides& o) {
  if (o.output_dir) return *o.output_dir;
  if (!c.output_dir.empty()) return c.output_dir;
  const char* root = std::getenv(kOutputRootEnv);
  return (fs::path(root && *root ? root : "mgq_runs") / c.experiment).string();
}

RunOutcome run_experiment(const ExperimentConfig& c, const RunOverrides& o, std::ostream& log) {
  const SuiteInfo* info = find_suite(c.experiment);
  if (!info) throw ConfigError("experiment: unknown '" + c.experiment + "'; valid names: " + names_list());
  SuiteConfig sc = info->configure(c.seed, c.params, c.tolerances);
  sc.model = c.model;
  sc.workers = o.workers.value_or(c.workers);
  sc.verbosity = o.verbosity.value_or(c.verbosity);
  if (sc.workers < 1) throw ConfigError("workers: must be at least 1");

  RunOutcome out;
  out.output_dir = resolve_output_dir(c, o);
  std::error_code ec;
  fs::create_directories(out.output_dir, ec);
  if (ec) throw ConfigError("output_dir: cannot create " + out.output_dir + ": " + ec.message());

  // The echo shows the effective parameters and tolerances. Worker count, verbosity and the
  // output location do not affect results and stay out of the manifest.
  json echo = config_to_json(c);
  echo.erase("workers");
  echo.erase("verbosity");
  echo.erase("output_dir");
  echo["params"] = sc.params;
  echo["tolerances"] = sc.tolerances;

  json m;
  m["schema_version"] = kManifestSchema;
  m["experiment"] = info->name;
  m["description"] = info->description;
  m["criterion"] = info->criterion;
  m["seed"] = c.seed;
  m["config"] = echo;
  m["versions"] = {{"mgq", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__}};

  if (sc.verbosity >= 1) log << "running " << info->name << " (seed " << c.seed << ", " << sc.workers << " workers)\n";
  SuiteResult res;
  try {
    res = info->run(sc);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    m["checks"] = json::array();
    m["error"] = {{"stage", info->name}, {"message", e.what()}};
    m["pass"] = false;
    write_file(fs::path(out.output_dir) / "manifest.json", m.dump(2) + "\n");
    out.manifest = m;
    out.exit_code = 1;
    if (sc.verbosity >= 1) log << "numerical failure in " << info->name << ": " << e.what() << "\n";
    return out;
  }

  json checks = json::array();
  for (const auto& ch : res.checks) {
    json cj{{"name", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}, {"measured", ch.measured}};
    if (ch.tolerance > 0.0) {
      cj["value"] = ch.value;
      cj["tolerance"] = ch.tolerance;
    }
    checks.push_back(cj);
    if (sc.verbosity >= 1) {
      log << "  " << (ch.pass ? "pass" : "FAIL") << "  " << ch.name;
      if (ch.tolerance > 0.0) log << "  " << ch.value << " < " << ch.tolerance;
      log << "\n";
    }
    if (sc.verbosity >= 2) log << "        " << ch.measured.dump() << "\n";
  }
  m["checks"] = checks;
  m["diagnostics"] = res.diagnostics;
  json arts = json::array();
  for (const auto& a : res.artifacts) {
    write_file(fs::path(out.output_dir) / a.filename, a.contents);
    arts.push_back(a.filename);
  }
  m["artifacts"] = arts;
  m["pass"] = res.pass();
  write_file(fs::path(out.output_dir) / "manifest.json", m.dump(2) + "\n");
  out.manifest = m;
  out.exit_code = res.pass() ? 0 : 1;
  if (sc.verbosity >= 1) log << (res.pass() ? "all checks pass" : "some checks failed") << "; manifest in " << out.output_dir << "\n";
  return out;
}

int run_config_file(const std::string& path, const RunOverrides& o, std::ostream& log, std::ostream& err) {
  try {
    ExperimentConfig c = load_config(path);
    return run_experiment(c, o, log).exit_code;
  } catch (const ModelError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
}

void list_experiments(std::ostream& os) {
  for (const auto& s : suite_registry()) os << s.name << '\t' << s.criterion << '\t' << s.description << '\n';
}

}  // namespace mgq
