#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mgq/acceptance_checks.hpp"

namespace mgq {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kManifestSchema = 1;
// Default output root when neither the config nor the command line names a directory.
inline constexpr const char* kOutputRootEnv = "MGQ_OUTPUT_ROOT";

// One run of one suite, as read from a YAML (or JSON) file.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::optional<ModelSpec> model;
  nlohmann::json params = nlohmann::json::object();
  std::map<std::string, double> tolerances;
  std::string output_dir;  // empty: derived from the environment
  int workers = 1;
  int verbosity = 1;
};

// Config errors are ConfigError; the message starts with the offending field.
class ConfigError : public ModelError {
 public:
  using ModelError::ModelError;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Normalized echo: every field, defaults filled in.
nlohmann::json config_to_json(const ExperimentConfig& c);

struct RunOverrides {
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<int> verbosity;
};

struct RunOutcome {
  int exit_code = 0;  // 0 all checks pass, 1 a check failed or a numerical error, 2 config error
  std::string output_dir;
  nlohmann::json manifest;
};

// Output directory: override, then config, then $MGQ_OUTPUT_ROOT/<experiment>, then
// ./mgq_runs/<experiment>.
std::string resolve_output_dir(const ExperimentConfig& c, const RunOverrides& o);

// Runs the configured suite, writes manifest.json and the suite's artifacts, and returns the
// exit code. Progress goes to `log` at verbosity >= 1.
RunOutcome run_experiment(const ExperimentConfig& c, const RunOverrides& o, std::ostream& log);
// Loads, validates and runs; config errors become exit code 2 with the message on `err`.
int run_config_file(const std::string& path, const RunOverrides& o, std::ostream& log, std::ostream& err);

// "name<TAB>criterion<TAB>description" per line, in registry order.
void list_experiments(std::ostream& os);

}  // namespace mgq
