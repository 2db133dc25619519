#pragma once

#include "delaysof/conic.hpp"

namespace delaysof {

/// Infeasible-start primal-dual path-following method (HKM direction with a
/// Mehrotra predictor-corrector). Small dense problems only.
class InteriorPointAdapter final : public SdpAdapter {
 public:
  std::string name() const override { return "ipm"; }
  AdapterOutput solve(const SvecProblem& problem, const SolverOptions& options) const override;
};

}  // namespace delaysof
