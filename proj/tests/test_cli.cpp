#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mgq/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mgq_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  CliRun mgq(const std::string& args, const std::string& env = "") {
    const fs::path o = dir_ / "stdout.txt", e = dir_ / "stderr.txt";
    std::string cmd = env + " '" MGQ_CLI_PATH "' " + args + " >'" + o.string() + "' 2>'" + e.string() + "'";
    int st = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  fs::path dir_;
};

const char* kQuick = "experiment: maxwell_identities\nseed: 7\nparams:\n  points: 3\n";

}  // namespace

TEST_F(Cli, ListIsStableAndCoversTheCriteria) {
  CliRun a = mgq("list"), b = mgq("list");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  for (const char* name : {"quantizer_axioms", "moyal_reduction", "magnetic_moyal_reduction", "sigma_reflections",
                           "connection_routes", "ricci_check", "front_map", "hbar_expansion", "associativity",
                           "maxwell_identities", "symplectic_connection", "membrane_phase", "permutation_formulas"})
    EXPECT_NE(a.out.find(std::string(name) + "\t"), std::string::npos) << name;
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 13);
}

TEST_F(Cli, MalformedConfigNamesTheField) {
  struct Case {
    std::string text, field;
  };
  std::vector<Case> cases{
      {"experiment: front_map\n", "seed"},
      {"experiment: front_map\nseed: abc\n", "seed"},
      {"experiment: front_map\nseed: 1\nworkers: 0\n", "workers"},
      {"experiment: front_map\nseed: 1\nparams:\n  nodes: -4\n", "params.nodes"},
      {"experiment: front_map\nseed: 1\nparams:\n  bogus: 1\n", "params.bogus"},
      {"experiment: front_map\nseed: 1\nparams:\n  y: [1]\n", "params.y"},
      {"experiment: maxwell_identities\nseed: 1\ntolerances:\n  duality: -1\n", "tolerances.duality"},
      {"experiment: front_map\nseed: 1\nmodel:\n  base: torus\n", "model.base"},
      {"experiment: front_map\nseed: 1\nmodel:\n  base: euclidean\n", "model.base"},
      {"experiment: front_map\nseed: 1\nmodel:\n  base: euclidean\n  field: {kind: wavy}\n", "model.field.kind"},
      {"experiment: front_map\nseed: 1\ncolour: red\n", "colour"},
      {"experiment: [front_map\n", "config"},
  };
  for (const auto& c : cases) {
    CliRun r = mgq("run '" + write("bad.yaml", c.text).string() + "' -o '" + (dir_ / "o").string() + "'");
    EXPECT_EQ(r.code, 2) << c.text;
    EXPECT_NE(r.err.find(c.field), std::string::npos) << c.text << " -> " << r.err;
  }
  EXPECT_EQ(mgq("run '" + (dir_ / "missing.yaml").string() + "'").code, 2);
  EXPECT_EQ(mgq("frobnicate").code, 2);
}

TEST_F(Cli, UnknownExperimentListsValidNames) {
  CliRun r = mgq("run '" + write("u.yaml", "experiment: nope\nseed: 1\n").string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  EXPECT_NE(r.err.find("quantizer_axioms"), std::string::npos);
  EXPECT_NE(r.err.find("permutation_formulas"), std::string::npos);
}

TEST_F(Cli, QuickSuiteWritesManifest) {
  CliRun r = mgq("run '" + write("q.yaml", kQuick).string() + "' -o '" + (dir_ / "out").string() + "' -v 0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.err.empty());
  json m = json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(m["experiment"], "maxwell_identities");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["config"]["params"]["points"], 3);
  EXPECT_EQ(m["config"]["tolerances"]["duality"], 1e-12);
  EXPECT_TRUE(m["pass"].get<bool>());
  EXPECT_EQ(m["schema_version"], mgq::kManifestSchema);
  EXPECT_EQ(m["versions"]["mgq"], mgq::kVersion);
  ASSERT_GE(m["checks"].size(), 5u);
  for (const auto& c : m["checks"]) {
    EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
    EXPECT_LT(c["value"].get<double>(), c["tolerance"].get<double>());
  }
}

TEST_F(Cli, FailingCheckExitsOneAndIsRecorded) {
  std::string text = std::string(kQuick) + "tolerances:\n  continuity: 1.0e-30\n";
  CliRun r = mgq("run '" + write("f.yaml", text).string() + "' -o '" + (dir_ / "out").string() + "'");
  EXPECT_EQ(r.code, 1);
  json m = json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_FALSE(m["pass"].get<bool>());
  bool seen = false;
  for (const auto& c : m["checks"])
    if (c["name"] == "continuity") {
      seen = true;
      EXPECT_FALSE(c["pass"].get<bool>());
    }
  EXPECT_TRUE(seen);
}

TEST_F(Cli, ManifestsAreByteIdenticalAcrossRunsAndWorkerCounts) {
  const std::string cfg = write("d.yaml", "experiment: associativity\nseed: 3\nparams:\n  chains: 6\n  symbol_triples: 1\n").string();
  CliRun a = mgq("run '" + cfg + "' -o '" + (dir_ / "a").string() + "' -j 1");
  CliRun b = mgq("run '" + cfg + "' -o '" + (dir_ / "b").string() + "' -j 3");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir_ / "a" / "manifest.json"), slurp(dir_ / "b" / "manifest.json"));
  // A different seed changes the measured values.
  CliRun c = mgq("run '" + write("e.yaml", "experiment: associativity\nseed: 4\nparams:\n  chains: 6\n  symbol_triples: 1\n").string() +
              "' -o '" + (dir_ / "c").string() + "'");
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "manifest.json"), slurp(dir_ / "c" / "manifest.json"));
}

TEST_F(Cli, FrontMapWritesCsvAndBandFraction) {
  CliRun r = mgq("run '" + write("fm.yaml", "experiment: front_map\nseed: 1\nparams: {nodes: 20}\n").string() + "'",
              "MGQ_OUTPUT_ROOT='" + (dir_ / "root").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path out = dir_ / "root" / "front_map";
  json m = json::parse(slurp(out / "manifest.json"));
  EXPECT_GT(m["diagnostics"]["boundary_band_fraction"].get<double>(), 0.0);
  const std::string csv = slurp(out / "front_map.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,class,J");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 20 * 20 + 1);
  EXPECT_TRUE(fs::exists(out / "plot_front_map.py"));
}

TEST_F(Cli, JsonConfigAndModelOverride) {
  // JSON is a subset of YAML; the model replaces the suite's default list.
  const std::string text =
      R"({"experiment": "symplectic_connection", "seed": 2, "params": {"points": 5},)"
      R"( "model": {"base": "deformed_r2", "amplitude": 0.2, "field": {"kind": "quadratic", "coeffs": [0.1, 0.2, 0, 0, 0, 0.3]}}})";
  CliRun r = mgq("run '" + write("j.json", text).string() + "' -o '" + (dir_ / "out").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  json m = json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(m["config"]["model"]["base"], "deformed_r2");
  EXPECT_EQ(m["checks"][0]["measured"].size(), 1u);
  EXPECT_TRUE(m["checks"][0]["measured"].contains("deformed_r2/quadratic"));
}

TEST(Config, ParsesAndEchoes) {
  auto c = mgq::parse_config("experiment: ricci_check\nseed: 5\nworkers: 2\nparams: {points: 2}\n");
  EXPECT_EQ(c.experiment, "ricci_check");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.workers, 2);
  json e = mgq::config_to_json(c);
  EXPECT_EQ(e["params"]["points"], 2);
  EXPECT_TRUE(e["model"].is_null());
  auto spec = mgq::model_from_json(json{{"base", "euclidean"}, {"n", 3}});
  EXPECT_EQ(spec.n, 3);
  EXPECT_EQ(mgq::model_to_json(mgq::model_from_json(mgq::model_to_json(spec))), mgq::model_to_json(spec));
}

TEST(Config, OutputDirectoryPrecedence) {
  mgq::ExperimentConfig c;
  c.experiment = "front_map";
  mgq::RunOverrides o;
  ::unsetenv(mgq::kOutputRootEnv);
  EXPECT_EQ(mgq::resolve_output_dir(c, o), (fs::path("mgq_runs") / "front_map").string());
  ::setenv(mgq::kOutputRootEnv, "/tmp/r", 1);
  EXPECT_EQ(mgq::resolve_output_dir(c, o), "/tmp/r/front_map");
  c.output_dir = "cfg";
  EXPECT_EQ(mgq::resolve_output_dir(c, o), "cfg");
  o.output_dir = "cli";
  EXPECT_EQ(mgq::resolve_output_dir(c, o), "cli");
  ::unsetenv(mgq::kOutputRootEnv);
}

TEST(Registry, EveryCriterionHasExactlyOneSuite) {
  std::vector<int> seen(14, 0);
  for (const auto& s : mgq::suite_registry()) {
    ASSERT_GE(s.criterion, 1);
    ASSERT_LE(s.criterion, 13);
    ++seen[s.criterion];
    EXPECT_EQ(mgq::find_suite(s.name), &s);
    for (const auto& [k, v] : s.default_tolerances) EXPECT_GT(v, 0.0) << s.name << " " << k;
  }
  for (int k = 1; k <= 13; ++k) EXPECT_EQ(seen[k], 1) << k;
  EXPECT_EQ(mgq::find_suite("nope"), nullptr);
}
