#include <CLI11.hpp>

#include <iostream>

#include "mgq/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Magneto-geodesic quantization experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mgq::kVersion);

  std::string config;
  std::string output;
  int workers = 0;
  int verbosity = -1;
  auto* run = app.add_subcommand("run", "run the experiment described by a YAML config");
  run->add_option("config", config, "config file")->required();
  run->add_option("-o,--output", output, "output directory (default: config, then $" +
                                             std::string(mgq::kOutputRootEnv) + "/<experiment>)");
  run->add_option("-j,--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("-v,--verbosity", verbosity, "0 quiet, 1 checks, 2 measured values")->check(CLI::Range(0, 3));

  auto* list = app.add_subcommand("list", "list experiments: name, criterion, description");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the config-error exit code.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    mgq::list_experiments(std::cout);
    return 0;
  }
  mgq::RunOverrides o;
  if (!output.empty()) o.output_dir = output;
  if (workers > 0) o.workers = workers;
  if (verbosity >= 0) o.verbosity = verbosity;
  return mgq::run_config_file(config, o, std::cerr, std::cerr);
}
