#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delaysof/conic.hpp"
#include "delaysof/lmi_system.hpp"
#include "delaysof/model.hpp"

namespace delaysof {

struct DesignOutcome {
  FeedbackGain gain{Eigen::MatrixXd::Zero(1, 1)};
  double rho = 0.0;
  DelayBounds bounds{1, 1};
  double margin = 0.0;
  Assignment variables;  // design layout
  double r_condition = 1.0;
};

/// One design solve; `outcome` is set only for FeasibleCertified.
struct DesignAttempt {
  double rho = 0.0;
  DelayBounds bounds{1, 1};
  SolveStatus status = SolveStatus::Inconclusive;
  double margin = 0.0;
  bool degenerate = false;
  std::string note;
  SolverStats stats;
  std::optional<DesignOutcome> outcome;
};

/// Solves the design LMIs at one rho and extracts K = -R^{-1} S^T.
/// Throws DegenerateSolutionError when cond(R) > 1e10.
DesignAttempt design_gain(const PlantModel& plant, const DelayBounds& bounds, double rho,
                          const SolverOptions& options = {});

/// Recomputes -R^{-1} S^T from design variables (with the same degeneracy check).
Eigen::MatrixXd gain_from_variables(const Assignment& values, double* r_condition = nullptr);

struct RhoGrid {
  double from = -1.0;
  double to = 1.0;
  double step = 0.01;

  /// Grid points from + i*step up to `to` (inclusive within 1e-9 step).
  std::vector<double> values() const;
  static RhoGrid single(double rho) { return {rho, rho, 1.0}; }
};

struct RhoSweep {
  std::optional<DesignOutcome> best;
  std::vector<DesignAttempt> log;  // grid order
};

/// Best = certified outcome with maximal margin; ties broken by smaller
/// ||K||_F, then smaller |rho|. Grid points are solved in parallel.
RhoSweep sweep_rho(const PlantModel& plant, const DelayBounds& bounds, const RhoGrid& grid,
                   const SolverOptions& options = {});

struct DelayScanEntry {
  int d_max = 0;
  SolveStatus status = SolveStatus::Inconclusive;
  double margin = 0.0;
  std::optional<double> rho;
  std::string note;
};

struct DesignDelayScan {
  std::optional<int> d_star;
  std::optional<DesignOutcome> outcome;
  std::vector<DelayScanEntry> log;
  std::vector<RhoSweep> sweeps;  // one per scanned d_max
};

/// Exhaustive increasing scan d_max = d_min .. d_cap.
DesignDelayScan max_certified_delay_design(const PlantModel& plant, int d_min, const RhoGrid& grid, int d_cap,
                                           const SolverOptions& options = {});

}  // namespace delaysof
