#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delaysof/conic.hpp"
#include "delaysof/lmi_system.hpp"
#include "delaysof/model.hpp"
#include "delaysof/synthesis.hpp"

namespace delaysof {

struct StabilityCertificate {
  FeedbackGain gain{Eigen::MatrixXd::Zero(1, 1)};
  DelayBounds bounds{1, 1};
  double margin = 0.0;
  Assignment variables;  // analysis layout: P, W1, W2, Z1, Z2, X, Q, Ls, r

  /// Q, S = -r K^T, R = r I.
  SupplyRate supply() const;
};

struct CertifyResult {
  SolveStatus status = SolveStatus::Inconclusive;
  double margin = 0.0;
  SolverStats stats;
  std::optional<StabilityCertificate> certificate;
};

CertifyResult certify(const PlantModel& plant, const DelayBounds& bounds, const FeedbackGain& K,
                      const SolverOptions& options = {});

struct AnalysisDelayScan {
  std::optional<int> d_star;
  std::optional<StabilityCertificate> certificate;
  std::vector<DelayScanEntry> log;
};

/// Exhaustive increasing scan d_max = d_min .. d_cap.
AnalysisDelayScan max_certified_delay_analysis(const PlantModel& plant, int d_min, const FeedbackGain& K,
                                               int d_cap, const SolverOptions& options = {});

}  // namespace delaysof
