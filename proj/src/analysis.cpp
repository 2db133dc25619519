#include "delaysof/analysis.hpp"

#include "delaysof/errors.hpp"

namespace delaysof {

SupplyRate StabilityCertificate::supply() const {
  const double r = variables.at(kVarScale)(0, 0);
  SupplyRate w;
  w.Q = variables.at(kVarQ);
  w.R = r * Eigen::MatrixXd::Identity(gain.m(), gain.m());
  w.S = -r * gain.K().transpose();
  return w;
}

CertifyResult certify(const PlantModel& plant, const DelayBounds& bounds, const FeedbackGain& K,
                      const SolverOptions& options) {
  const LmiSystem sys = build_analysis_system(plant, bounds, K, options.kappa);
  const SolveResult res = solve(compile(sys), options);
  CertifyResult out;
  out.status = res.status;
  out.margin = res.margin;
  out.stats = res.stats;
  if (res.status == SolveStatus::FeasibleCertified) {
    out.certificate = StabilityCertificate{K, bounds, res.margin, res.values};
  }
  return out;
}

AnalysisDelayScan max_certified_delay_analysis(const PlantModel& plant, int d_min, const FeedbackGain& K,
                                               int d_cap, const SolverOptions& options) {
  if (d_cap < d_min) throw ContractError("d_cap must be >= d_min");
  AnalysisDelayScan scan;
  for (int dM = d_min; dM <= d_cap; ++dM) {
    CertifyResult r = certify(plant, DelayBounds(d_min, dM), K, options);
    DelayScanEntry e;
    e.d_max = dM;
    e.status = r.status;
    e.margin = r.margin;
    if (r.status == SolveStatus::Inconclusive) e.note = "inconclusive (treated as infeasible)";
    if (r.certificate) {
      scan.d_star = dM;
      scan.certificate = std::move(r.certificate);
    }
    scan.log.push_back(e);
  }
  return scan;
}

}  // namespace delaysof
