#pragma once

#include <Eigen/Dense>
#include "json.hpp"

#include <optional>
#include <string>

#include "delaysof/conic.hpp"
#include "delaysof/errors.hpp"
#include "delaysof/model.hpp"
#include "delaysof/synthesis.hpp"
#include "delaysof/verify.hpp"

namespace delaysof {

// Bad configuration; the message starts with the offending JSON path.
class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

enum class RunMode { Design, Analyze, MaxDelayDesign, MaxDelayAnalyze, Simulate, Verify };

std::string to_string(RunMode mode);
RunMode parse_mode(const std::string& text);  // throws ConfigError
bool is_design_mode(RunMode mode);
bool needs_gain(RunMode mode);

/// Either a discrete (A, B) pair or a continuous (Ac, Bc, Ts) triple.
/// C defaults to the identity (state feedback).
struct PlantSpec {
  std::optional<Eigen::MatrixXd> A, B;
  std::optional<Eigen::MatrixXd> Ac, Bc;
  std::optional<double> Ts;
  std::optional<Eigen::MatrixXd> C;

  PlantModel build() const;
};

struct RunConfig {
  RunMode mode = RunMode::Design;
  PlantSpec plant;
  int d_min = 1;
  int d_max = 1;  // fixed-bound modes
  int d_cap = 1;  // maxdelay modes
  std::optional<double> rho;
  std::optional<RhoGrid> rho_grid;
  std::optional<Eigen::MatrixXd> gain;
  std::optional<Eigen::MatrixXd> reference_gain;  // reported against, never used for decisions
  SolverOptions solver;
  bool simulation_enabled = true;
  SimulationOptions simulation{100, 0, 1e-6, 10, true, 0};  // steps 0 = "auto"
  int chain_samples = 100;
  std::string report_path;
  std::string trajectory_path;

  RhoGrid effective_grid() const;
};

RunConfig parse_config(const nlohmann::json& j);
/// Reads and parses a file; JSON syntax errors carry the path, line and column.
/// A given `mode` fills in a missing "mode" key and must match a present one.
RunConfig load_config(const std::string& path, const std::optional<std::string>& mode = std::nullopt);
/// Normalized form: every field spelled out, stable key order.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// The single table of defaults echoed into every report.
nlohmann::ordered_json defaults_table();

}  // namespace delaysof
