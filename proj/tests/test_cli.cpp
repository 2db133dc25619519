#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "delaysof/config.hpp"
#include "delaysof/report.hpp"
#include "delaysof/runner.hpp"

using namespace delaysof;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::string kConfigs = DELAYSOF_SOURCE_DIR "/configs/";

json base(const std::string& mode) {
  json j;
  j["mode"] = mode;
  j["plant"] = {{"Ac", {{-0.8, -0.01}, {1.0, 0.1}}}, {"Bc", {{0.4}, {0.1}}}, {"Ts", 0.5}};
  j["bounds"] = {{"d_min", 1}, {"d_max", 3}};
  return j;
}

std::string error_of(const json& j) {
  try {
    (void)parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << contents;
  return path;
}

}  // namespace

TEST(Config, SampleConfigsParse) {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW((void)load_config(entry.path().string())) << entry.path();
  }
}

TEST(Config, Defaults) {
  json j = base("analyze");
  j["gain"] = {{-1.2625, -1.2679}};
  const RunConfig c = parse_config(j);
  EXPECT_EQ(c.mode, RunMode::Analyze);
  EXPECT_EQ(c.solver.epsilon_feas, 1e-7);
  EXPECT_EQ(c.solver.kappa, 1e3);
  EXPECT_EQ(c.simulation.seeds, 100);
  EXPECT_EQ(c.simulation.steps, 0);  // auto
  EXPECT_EQ(c.plant.build().C(), Eigen::MatrixXd::Identity(2, 2));
}

TEST(Config, Errors) {
  EXPECT_NE(error_of(base("analyze")).find("/gain"), std::string::npos);
  json both = base("design");
  both["rho"] = -0.15;
  both["rho_grid"] = {{"from", -1}, {"to", 1}, {"step", 0.1}};
  EXPECT_NE(error_of(both).find("exactly one"), std::string::npos);
  EXPECT_NE(error_of(base("design")).find("exactly one"), std::string::npos);
  json typo = base("simulate");
  typo["gain"] = {{0, 0}};
  typo["simulaton"] = json::object();
  EXPECT_NE(error_of(typo).find("/simulaton"), std::string::npos);
  json shape = base("analyze");
  shape["gain"] = {{1.0}};
  EXPECT_NE(error_of(shape).find("expected 1x2"), std::string::npos);
  json ragged = base("analyze");
  ragged["plant"]["Ac"] = {{1.0, 2.0}, {3.0}};
  EXPECT_NE(error_of(ragged).find("/plant/Ac/1"), std::string::npos);
  json bad_mode = base("nope");
  EXPECT_NE(error_of(bad_mode).find("unknown mode"), std::string::npos);
  json cap = base("maxdelay-analyze");
  cap["gain"] = {{0, 0}};
  EXPECT_NE(error_of(cap).find("/bounds/d_cap"), std::string::npos);
}

TEST(Config, SyntaxErrorCarriesPathAndLine) {
  const auto path = temp_file("delaysof_bad.json", "{\n  \"mode\": \"design\",\n  oops\n}\n");
  try {
    (void)load_config(path.string());
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(path.string()), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  }
}

TEST(Config, ModeOverride) {
  json j = base("analyze");
  j["gain"] = {{-1.2625, -1.2679}};
  const auto path = temp_file("delaysof_mode.json", j.dump());
  EXPECT_EQ(load_config(path.string(), std::string("analyze")).mode, RunMode::Analyze);
  EXPECT_THROW((void)load_config(path.string(), std::string("verify")), ConfigError);
  j.erase("mode");
  const auto path2 = temp_file("delaysof_nomode.json", j.dump());
  EXPECT_EQ(load_config(path2.string(), std::string("verify")).mode, RunMode::Verify);
}

TEST(ConfigProperty, RoundTripIsByteIdentical) {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    const std::string once = config_to_json(load_config(entry.path().string())).dump(2);
    const std::string twice = config_to_json(parse_config(json::parse(once))).dump(2);
    EXPECT_EQ(once, twice) << entry.path();
  }
}

TEST(Report, JsonRoundTripAndEmptyLogs) {
  RunReport r;
  r.body["status"] = "infeasible";
  r.body["margin"] = 1.0 / 3.0;
  r.body["rho_sweep"] = ordered_json::array();
  r.body["nested"] = {{"x", 0.1 + 0.2}, {"big", 123456789.123456789}};
  const std::string text = export_report(r, ReportFormat::Json);
  const ordered_json back = ordered_json::parse(text);
  EXPECT_EQ(back, r.body);
  EXPECT_TRUE(back["rho_sweep"].is_array());
  EXPECT_TRUE(back["rho_sweep"].empty());
  r.body["inf"] = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(ordered_json::parse(export_report(r, ReportFormat::Json))["inf"].is_null());
  EXPECT_THROW(parse_format("xml"), ContractError);
}

TEST(Runner, AnalyzeReferenceGain) {
  RunConfig cfg = load_config(kConfigs + "ssf_reference_analyze.json");
  cfg.simulation.seeds = 5;
  const RunReport r = run(cfg);
  EXPECT_EQ(r.status(), "certified");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.body["certified_bounds"]["d_max"], 3);
  EXPECT_TRUE(r.body["oracles"]["spectral"]["pass"].get<bool>());
  EXPECT_TRUE(r.body["oracles"]["dissipation_chain"]["pass"].get<bool>());
  EXPECT_EQ(r.body["config"], config_to_json(cfg));
  EXPECT_EQ(r.body["tool"]["version"], kToolVersion);
  EXPECT_TRUE(r.body.contains("defaults"));
  const std::string text = export_report(r, ReportFormat::Text);
  EXPECT_NE(text.find("certified"), std::string::npos);
}

TEST(Runner, DesignOutputFeedback) {
  RunConfig cfg = load_config(kConfigs + "sof_design.json");
  cfg.simulation.seeds = 5;
  const RunReport r = run(cfg);
  EXPECT_EQ(r.status(), "certified");
  EXPECT_NEAR(r.body["gain"][0][0].get<double>(), -0.1498, 0.05);
  EXPECT_TRUE(r.body["reference"]["within_tolerance"].get<bool>());
  EXPECT_EQ(r.body["oracles"]["recertification"]["status"], "feasible-certified");
  EXPECT_EQ(r.body["rho_sweep"].size(), 1u);
}

TEST(Runner, OracleFailureIsFlagged) {
  // a fixed 500-step horizon is too short for this slowly decaying loop
  RunConfig cfg = load_config(kConfigs + "sof_design.json");
  cfg.simulation.seeds = 2;
  cfg.simulation.steps = 500;
  const RunReport r = run(cfg);
  EXPECT_EQ(r.status(), "certified-by-LMI-only, oracle-failed");
  EXPECT_EQ(r.exit_code, 1);
  ASSERT_FALSE(r.body["flags"].empty());
  EXPECT_NE(r.body["flags"][0].get<std::string>().find("simulation"), std::string::npos);
}

TEST(Runner, OpenLoopSimulationDiverges) {
  const RunReport r = run(load_config(kConfigs + "open_loop_simulate.json"));
  EXPECT_EQ(r.status(), "simulation-failed");
  EXPECT_EQ(r.exit_code, 1);
  const auto& sim = r.body["oracles"]["simulation"];
  EXPECT_EQ(sim["diverged"], sim["total"]);
  for (const auto& s : sim["sequences"]) EXPECT_GT(s["first_divergence_step"].get<int>(), 0);
}

TEST(Runner, InfeasibleAnalysis) {
  json j = base("analyze");
  j["bounds"]["d_max"] = 4;
  j["gain"] = {{-1.2625, -1.2679}};
  const RunReport r = run(parse_config(j));
  EXPECT_EQ(r.status(), "infeasible");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(r.body["certified_bounds"].is_null());
}

TEST(Runner, MaxDelayAnalyze) {
  json j = base("maxdelay-analyze");
  j["bounds"] = {{"d_min", 1}, {"d_cap", 5}};
  j["gain"] = {{-1.2625, -1.2679}};
  j["simulation"] = {{"seeds", 3}};
  const RunReport r = run(parse_config(j));
  EXPECT_EQ(r.status(), "certified");
  EXPECT_EQ(r.body["d_star"], 3);
  EXPECT_EQ(r.body["delay_scan"].size(), 5u);
}

TEST(Runner, TrajectoryExport) {
  json j = base("simulate");
  j["gain"] = {{-1.2625, -1.2679}};
  j["simulation"] = {{"seeds", 1}, {"steps", "auto"}};
  const auto csv = std::filesystem::temp_directory_path() / "delaysof_traj.csv";
  j["outputs"] = {{"trajectory_csv", csv.string()}};
  const RunReport r = run(parse_config(j));
  EXPECT_EQ(r.status(), "simulation-passed");
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "k,x1,x2,u1,d");
}

TEST(Runner, MissingAdapterIsAnEnvironmentError) {
  json j = base("analyze");
  j["gain"] = {{-1.2625, -1.2679}};
  ::setenv("DELAYSOF_SOLVER", "missing", 1);
  EXPECT_THROW(run(parse_config(j)), EnvironmentError);
  ::unsetenv("DELAYSOF_SOLVER");
}
