#include "delaysof/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "delaysof/errors.hpp"

namespace delaysof {

namespace {

constexpr double kMaxRCondition = 1e10;

// Runs fn(i) for i in [0, count) on a few worker threads.
template <typename Fn>
void parallel_for(int count, Fn fn) {
  const int workers = std::max(1, std::min<int>(count, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// true if a is a better design than b
bool better(const DesignOutcome& a, const DesignOutcome& b) {
  const double scale = std::max({1.0, std::abs(a.margin), std::abs(b.margin)});
  if (std::abs(a.margin - b.margin) > 1e-12 * scale) return a.margin > b.margin;
  const double ka = a.gain.K().norm(), kb = b.gain.K().norm();
  if (ka != kb) return ka < kb;
  return std::abs(a.rho) < std::abs(b.rho);
}

}  // namespace

Eigen::MatrixXd gain_from_variables(const Assignment& values, double* r_condition) {
  const Eigen::MatrixXd& R = values.at(kVarR);
  const Eigen::MatrixXd& S = values.at(kVarS);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (r_condition) *r_condition = cond;
  if (!(cond <= kMaxRCondition)) {
    throw DegenerateSolutionError("R is numerically singular (condition number " + std::to_string(cond) + ")");
  }
  return -R.fullPivLu().solve(S.transpose());
}

DesignAttempt design_gain(const PlantModel& plant, const DelayBounds& bounds, double rho,
                          const SolverOptions& options) {
  const LmiSystem sys = build_design_system(plant, bounds, rho, options.kappa);
  const SolveResult res = solve(compile(sys), options);

  DesignAttempt a;
  a.rho = rho;
  a.bounds = bounds;
  a.status = res.status;
  a.margin = res.margin;
  a.stats = res.stats;
  if (res.status != SolveStatus::FeasibleCertified) return a;

  DesignOutcome out;
  out.gain = FeedbackGain(gain_from_variables(res.values, &out.r_condition));
  out.rho = rho;
  out.bounds = bounds;
  out.margin = res.margin;
  out.variables = res.values;
  a.outcome = std::move(out);
  return a;
}

std::vector<double> RhoGrid::values() const {
  if (!(step > 0.0) || !(from <= to) || !std::isfinite(from) || !std::isfinite(to)) {
    throw ContractError("rho grid needs step > 0 and from <= to");
  }
  const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
  if (count > 1000000) throw ContractError("rho grid too large");
  std::vector<double> v;
  v.reserve(static_cast<size_t>(count));
  for (long i = 0; i < count; ++i) v.push_back(from + static_cast<double>(i) * step);
  return v;
}

RhoSweep sweep_rho(const PlantModel& plant, const DelayBounds& bounds, const RhoGrid& grid,
                   const SolverOptions& options) {
  const std::vector<double> rhos = grid.values();
  if (rhos.empty()) throw ContractError("empty rho grid");

  RhoSweep sweep;
  sweep.log.resize(rhos.size());
  parallel_for(static_cast<int>(rhos.size()), [&](int i) {
    const double rho = rhos[static_cast<size_t>(i)];
    DesignAttempt a;
    try {
      a = design_gain(plant, bounds, rho, options);
    } catch (const DegenerateSolutionError& e) {
      a.rho = rho;
      a.bounds = bounds;
      a.status = SolveStatus::FeasibleCertified;
      a.degenerate = true;
      a.note = std::string("degenerate: ") + e.what();
    }
    if (a.status == SolveStatus::Inconclusive && a.note.empty()) a.note = "inconclusive (treated as infeasible)";
    sweep.log[static_cast<size_t>(i)] = std::move(a);
  });

  for (const auto& a : sweep.log) {
    if (a.outcome && (!sweep.best || better(*a.outcome, *sweep.best))) sweep.best = a.outcome;
  }
  return sweep;
}

DesignDelayScan max_certified_delay_design(const PlantModel& plant, int d_min, const RhoGrid& grid, int d_cap,
                                           const SolverOptions& options) {
  if (d_cap < d_min) throw ContractError("d_cap must be >= d_min");
  DesignDelayScan scan;
  for (int dM = d_min; dM <= d_cap; ++dM) {
    RhoSweep sweep = sweep_rho(plant, DelayBounds(d_min, dM), grid, options);
    DelayScanEntry e;
    e.d_max = dM;
    if (sweep.best) {
      e.status = SolveStatus::FeasibleCertified;
      e.margin = sweep.best->margin;
      e.rho = sweep.best->rho;
      scan.d_star = dM;
      scan.outcome = sweep.best;
    } else {
      const bool any_inconclusive = std::any_of(sweep.log.begin(), sweep.log.end(), [](const DesignAttempt& a) {
        return a.status == SolveStatus::Inconclusive;
      });
      const bool any_degenerate =
          std::any_of(sweep.log.begin(), sweep.log.end(), [](const DesignAttempt& a) { return a.degenerate; });
      e.status = any_inconclusive ? SolveStatus::Inconclusive : SolveStatus::Infeasible;
      if (any_degenerate) e.note = "degenerate solutions only";
    }
    scan.log.push_back(e);
    scan.sweeps.push_back(std::move(sweep));
  }
  return scan;
}

}  // namespace delaysof
