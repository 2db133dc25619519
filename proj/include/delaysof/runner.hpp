#pragma once

#include <functional>
#include <string>

#include "delaysof/config.hpp"
#include "delaysof/report.hpp"

namespace delaysof {

struct RunOptions {
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

/// Dispatches one configured run. Design modes always chain
/// solve -> K -> re-certification -> spectral -> simulation -> dissipation chain.
/// Throws EnvironmentError when the solver adapter is unavailable.
RunReport run(const RunConfig& cfg, const RunOptions& options = {});

}  // namespace delaysof
