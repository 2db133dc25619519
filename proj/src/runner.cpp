#include "delaysof/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>

#include "delaysof/analysis.hpp"
#include "delaysof/synthesis.hpp"
#include "delaysof/verify.hpp"

namespace delaysof {

using nlohmann::ordered_json;

namespace {

constexpr double kReferenceTolerance = 0.05;

const char* const kDesignNames[] = {"P", "W1", "W2", "Z1", "Z2", "X", "Q", "R", "S"};
const char* const kAnalysisNames[] = {"P", "W1", "W2", "Z1", "Z2", "X", "Q", "Ls", "r"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ordered_json stats_json(const SolverStats& s) {
  return {{"adapter", s.adapter},
          {"adapter_status", s.adapter_status},
          {"iterations", s.iterations},
          {"primal_residual", s.primal_residual},
          {"dual_residual", s.dual_residual},
          {"gap", s.gap},
          {"min_constraint_eig", s.min_constraint_eig},
          {"margin_upper_bound", s.margin_upper_bound},
          {"wall_seconds", s.wall_seconds},
          {"message", s.message}};
}

ordered_json variables_json(const Assignment& vars, const char* const* names) {
  ordered_json j = ordered_json::object();
  for (size_t i = 0; i < vars.size(); ++i) j[names[i]] = matrix_to_json(vars[i]);
  return j;
}

ordered_json bounds_json(const DelayBounds& b) { return {{"d_min", b.d_min()}, {"d_max", b.d_max()}}; }

struct Verdict {
  std::string status;
  int exit_code;
};

Verdict lmi_verdict(SolveStatus s) {
  switch (s) {
    case SolveStatus::FeasibleCertified: return {"certified", kExitCertified};
    case SolveStatus::Infeasible: return {"infeasible", kExitUncertified};
    case SolveStatus::Inconclusive: break;
  }
  return {"inconclusive", kExitInconclusive};
}

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunOptions& opts) : cfg_(cfg), opts_(opts), plant_(cfg.plant.build()) {}

  RunReport go() {
    const auto t0 = Clock::now();
    (void)default_adapter();  // fail early on a bad adapter selection

    r_["tool"] = {{"name", "delaysof"}, {"version", kToolVersion}};
    r_["mode"] = to_string(cfg_.mode);
    r_["status"] = "inconclusive";
    r_["exit_code"] = kExitInconclusive;
    r_["flags"] = ordered_json::array();
    r_["config"] = config_to_json(cfg_);
    r_["defaults"] = defaults_table();
    r_["plant"] = {{"A", matrix_to_json(plant_.A())}, {"B", matrix_to_json(plant_.B())}, {"C", matrix_to_json(plant_.C())}};
    r_["gain"] = nullptr;
    r_["certified_bounds"] = nullptr;
    r_["margin"] = nullptr;
    r_["oracles"] = ordered_json::object();

    switch (cfg_.mode) {
      case RunMode::Design: design(); break;
      case RunMode::Analyze: analyze(false); break;
      case RunMode::Verify: analyze(true); break;
      case RunMode::MaxDelayDesign: maxdelay_design(); break;
      case RunMode::MaxDelayAnalyze: maxdelay_analyze(); break;
      case RunMode::Simulate: simulate_only(); break;
    }
    r_["timings"] = {{"lmi_seconds", lmi_seconds_}, {"oracle_seconds", oracle_seconds_}, {"total_seconds", seconds_since(t0)}};

    RunReport rep;
    rep.exit_code = r_["exit_code"].get<int>();
    rep.body = std::move(r_);
    return rep;
  }

 private:
  void log(const std::string& line) const {
    if (opts_.log) opts_.log(line);
  }

  void set_verdict(const Verdict& v) {
    r_["status"] = v.status;
    r_["exit_code"] = v.exit_code;
  }

  void flag(const std::string& text) { r_["flags"].push_back(text); }

  void set_gain(const FeedbackGain& K) {
    r_["gain"] = matrix_to_json(K.K());
    if (cfg_.reference_gain) {
      const double dev = (K.K() - *cfg_.reference_gain).cwiseAbs().maxCoeff();
      r_["reference"] = {{"gain", matrix_to_json(*cfg_.reference_gain)},
                         {"max_abs_deviation", dev},
                         {"tolerance", kReferenceTolerance},
                         {"within_tolerance", dev <= kReferenceTolerance}};
    }
  }

  int simulation_steps(const FeedbackGain& K, const DelayBounds& b) const {
    return cfg_.simulation.steps > 0 ? cfg_.simulation.steps
                                     : automatic_horizon(plant_, K, b, cfg_.simulation.threshold);
  }

  // Runs spectral, simulation and chain oracles; returns the names of failed ones.
  std::vector<std::string> oracles(const FeedbackGain& K, const DelayBounds& b, const Assignment* vars,
                                   const SupplyRate* supply) {
    const auto t0 = Clock::now();
    std::vector<std::string> failed;
    auto& o = r_["oracles"];

    log("spectral oracle over d in [" + std::to_string(b.d_min()) + ", " + std::to_string(b.d_max()) + "]");
    const SpectralReport sp = spectral_oracle(plant_, K, b);
    o["spectral"] = {{"delays", sp.delays}, {"radii", sp.radii}, {"max_radius", sp.max_radius}, {"pass", sp.pass}};
    if (!sp.pass) failed.push_back("spectral");

    if (cfg_.simulation_enabled || cfg_.mode == RunMode::Simulate) {
      SimulationOptions so = cfg_.simulation;
      so.steps = simulation_steps(K, b);
      log("simulation oracle: " + std::to_string(so.seeds) + " seeds, T = " + std::to_string(so.steps));
      const SimulationReport sr = simulation_oracle(plant_, K, b, so);
      ordered_json seqs = ordered_json::array();
      for (const auto& s : sr.sequences) {
        seqs.push_back({{"sequence", s.sequence},
                        {"seed", s.seed},
                        {"runs", s.runs},
                        {"passed", s.passed},
                        {"diverged", s.diverged},
                        {"first_divergence_step", s.first_divergence_step},
                        {"worst_ratio", s.worst_ratio},
                        {"pass", s.passed == s.runs}});
      }
      o["simulation"] = {{"steps", sr.steps},
                         {"horizon", cfg_.simulation.steps > 0 ? "fixed" : "auto"},
                         {"threshold", so.threshold},
                         {"total", sr.total},
                         {"passed", sr.passed},
                         {"diverged", sr.diverged},
                         {"worst_ratio", sr.worst_ratio},
                         {"pass", sr.pass},
                         {"sequences", seqs}};
      if (!sr.pass) failed.push_back("simulation");
    }

    if (vars && supply && cfg_.chain_samples > 0) {
      log("dissipation chain: " + std::to_string(cfg_.chain_samples) + " samples");
      const ChainSummary cs =
          dissipation_chain_oracle(plant_, K, *vars, *supply, b, cfg_.chain_samples, cfg_.simulation.base_seed);
      o["dissipation_chain"] = {{"samples", cs.samples},
                                {"passed", cs.passed},
                                {"worst_lkf_gap", cs.worst_lkf_gap},
                                {"worst_supply_gap", cs.worst_supply_gap},
                                {"max_w", cs.max_w},
                                {"pass", cs.pass}};
      if (!cs.pass) failed.push_back("dissipation_chain");
    }
    write_trajectory(K, b);
    oracle_seconds_ += seconds_since(t0);
    return failed;
  }

  void write_trajectory(const FeedbackGain& K, const DelayBounds& b) {
    if (cfg_.trajectory_path.empty()) return;
    const int T = simulation_steps(K, b);
    const std::vector<Eigen::VectorXd> phi(static_cast<size_t>(b.d_max() + 1), Eigen::VectorXd::Unit(plant_.n(), 0));
    const Trajectory tr = simulate(plant_, K, b, random_delays(b, T, cfg_.simulation.base_seed), phi);
    std::ofstream out(cfg_.trajectory_path);
    if (!out) throw EnvironmentError(cfg_.trajectory_path + ": cannot open for writing");
    write_trajectory_csv(tr, out);
    if (!out) throw EnvironmentError(cfg_.trajectory_path + ": write failed");
    r_["trajectory_csv"] = cfg_.trajectory_path;
  }

  // LMI-certified result: downgrade when any oracle disagrees.
  void finish_certified(const std::vector<std::string>& failed) {
    if (failed.empty()) {
      set_verdict({"certified", kExitCertified});
      return;
    }
    set_verdict({"certified-by-LMI-only, oracle-failed", kExitUncertified});
    std::string names;
    for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
    flag("ORACLE FAILURE: " + names + " disagree with the LMI certificate");
  }

  ordered_json sweep_json(const RhoSweep& sweep) const {
    ordered_json log = ordered_json::array();
    for (const auto& a : sweep.log) {
      ordered_json e = {{"rho", a.rho},
                        {"status", to_string(a.status)},
                        {"margin", a.margin},
                        {"degenerate", a.degenerate},
                        {"note", a.note},
                        {"iterations", a.stats.iterations}};
      if (a.outcome) e["gain"] = matrix_to_json(a.outcome->gain.K());
      log.push_back(std::move(e));
    }
    return log;
  }

  static Verdict sweep_failure_verdict(const RhoSweep& sweep) {
    const bool unsure = std::any_of(sweep.log.begin(), sweep.log.end(), [](const DesignAttempt& a) {
      return a.status == SolveStatus::Inconclusive || a.degenerate;
    });
    return unsure ? Verdict{"inconclusive", kExitInconclusive} : Verdict{"infeasible", kExitUncertified};
  }

  // Shared tail of both design modes.
  void certify_design(const DesignOutcome& best) {
    const FeedbackGain& K = best.gain;
    set_gain(K);
    r_["rho"] = best.rho;
    r_["margin"] = best.margin;
    r_["certified_bounds"] = bounds_json(best.bounds);
    r_["r_condition"] = best.r_condition;
    r_["certificate"] = {{"kind", "design"}, {"variables", variables_json(best.variables, kDesignNames)}};

    log("re-certifying the extracted gain");
    auto t0 = Clock::now();
    const CertifyResult rc = certify(plant_, best.bounds, K, cfg_.solver);
    lmi_seconds_ += seconds_since(t0);
    r_["oracles"]["recertification"] = {
        {"status", to_string(rc.status)}, {"margin", rc.margin}, {"solver", stats_json(rc.stats)}};

    std::vector<std::string> failed;
    if (!rc.certificate) failed.push_back("recertification");
    const SupplyRate design_supply =
        supply_from(build_design_system(plant_, best.bounds, best.rho, cfg_.solver.kappa), best.variables);
    const SupplyRate supply = rc.certificate ? rc.certificate->supply() : design_supply;
    const Assignment& vars = rc.certificate ? rc.certificate->variables : best.variables;
    const auto more = oracles(K, best.bounds, &vars, &supply);
    failed.insert(failed.end(), more.begin(), more.end());
    finish_certified(failed);
  }

  void design() {
    const DelayBounds b(cfg_.d_min, cfg_.d_max);
    log("design sweep at bounds (" + std::to_string(b.d_min()) + ", " + std::to_string(b.d_max()) + ")");
    const auto t0 = Clock::now();
    const RhoSweep sweep = sweep_rho(plant_, b, cfg_.effective_grid(), cfg_.solver);
    lmi_seconds_ += seconds_since(t0);
    r_["rho_sweep"] = sweep_json(sweep);
    if (!sweep.best) {
      set_verdict(sweep_failure_verdict(sweep));
      return;
    }
    for (const auto& a : sweep.log) {
      if (a.outcome && a.rho == sweep.best->rho) r_["solver"] = stats_json(a.stats);
    }
    certify_design(*sweep.best);
  }

  void analyze(bool always_check) {
    const DelayBounds b(cfg_.d_min, cfg_.d_max);
    const FeedbackGain K(*cfg_.gain);
    set_gain(K);
    log("certifying the given gain at (" + std::to_string(b.d_min()) + ", " + std::to_string(b.d_max()) + ")");
    const auto t0 = Clock::now();
    const CertifyResult rc = certify(plant_, b, K, cfg_.solver);
    lmi_seconds_ += seconds_since(t0);
    r_["solver"] = stats_json(rc.stats);
    r_["lmi_status"] = to_string(rc.status);
    r_["margin"] = rc.margin;
    if (rc.certificate) {
      r_["certified_bounds"] = bounds_json(b);
      r_["certificate"] = {{"kind", "analysis"}, {"variables", variables_json(rc.certificate->variables, kAnalysisNames)}};
      const SupplyRate supply = rc.certificate->supply();
      finish_certified(oracles(K, b, &rc.certificate->variables, &supply));
      return;
    }
    set_verdict(lmi_verdict(rc.status));
    if (always_check) (void)oracles(K, b, nullptr, nullptr);
  }

  ordered_json scan_json(const std::vector<DelayScanEntry>& log) const {
    ordered_json j = ordered_json::array();
    for (const auto& e : log) {
      ordered_json row = {{"d_max", e.d_max}, {"status", to_string(e.status)}, {"margin", e.margin}};
      row["rho"] = e.rho ? ordered_json(*e.rho) : ordered_json(nullptr);
      row["note"] = e.note;
      j.push_back(std::move(row));
    }
    return j;
  }

  void scan_flags(const std::vector<DelayScanEntry>& log, std::optional<int> d_star) {
    if (d_star && *d_star == cfg_.d_cap) flag("scan reached d_cap; the certifiable bound may be larger");
    bool seen_gap = false;
    for (const auto& e : log) {
      if (e.status != SolveStatus::FeasibleCertified) seen_gap = true;
      else if (seen_gap) {
        flag("non-monotone scan: certified at d_max = " + std::to_string(e.d_max) + " after an uncertified value");
        break;
      }
    }
  }

  static Verdict scan_failure_verdict(const std::vector<DelayScanEntry>& log) {
    const bool unsure = std::any_of(log.begin(), log.end(), [](const DelayScanEntry& e) {
      return e.status == SolveStatus::Inconclusive || !e.note.empty();
    });
    return unsure ? Verdict{"inconclusive", kExitInconclusive} : Verdict{"infeasible", kExitUncertified};
  }

  void maxdelay_design() {
    log("design scan d_max = " + std::to_string(cfg_.d_min) + " .. " + std::to_string(cfg_.d_cap));
    const auto t0 = Clock::now();
    const DesignDelayScan scan = max_certified_delay_design(plant_, cfg_.d_min, cfg_.effective_grid(), cfg_.d_cap, cfg_.solver);
    lmi_seconds_ += seconds_since(t0);
    r_["d_star"] = scan.d_star ? ordered_json(*scan.d_star) : ordered_json(nullptr);
    r_["delay_scan"] = scan_json(scan.log);
    scan_flags(scan.log, scan.d_star);
    if (!scan.outcome) {
      set_verdict(scan_failure_verdict(scan.log));
      return;
    }
    const size_t idx = static_cast<size_t>(*scan.d_star - cfg_.d_min);
    r_["rho_sweep"] = sweep_json(scan.sweeps[idx]);
    certify_design(*scan.outcome);
  }

  void maxdelay_analyze() {
    const FeedbackGain K(*cfg_.gain);
    set_gain(K);
    log("analysis scan d_max = " + std::to_string(cfg_.d_min) + " .. " + std::to_string(cfg_.d_cap));
    const auto t0 = Clock::now();
    const AnalysisDelayScan scan = max_certified_delay_analysis(plant_, cfg_.d_min, K, cfg_.d_cap, cfg_.solver);
    lmi_seconds_ += seconds_since(t0);
    r_["d_star"] = scan.d_star ? ordered_json(*scan.d_star) : ordered_json(nullptr);
    r_["delay_scan"] = scan_json(scan.log);
    scan_flags(scan.log, scan.d_star);
    if (!scan.certificate) {
      set_verdict(scan_failure_verdict(scan.log));
      return;
    }
    const auto& cert = *scan.certificate;
    r_["margin"] = cert.margin;
    r_["certified_bounds"] = bounds_json(cert.bounds);
    r_["certificate"] = {{"kind", "analysis"}, {"variables", variables_json(cert.variables, kAnalysisNames)}};
    const SupplyRate supply = cert.supply();
    finish_certified(oracles(K, cert.bounds, &cert.variables, &supply));
  }

  void simulate_only() {
    const DelayBounds b(cfg_.d_min, cfg_.d_max);
    const FeedbackGain K(*cfg_.gain);
    set_gain(K);
    const auto failed = oracles(K, b, nullptr, nullptr);
    const bool sim_ok = std::find(failed.begin(), failed.end(), "simulation") == failed.end();
    set_verdict(sim_ok ? Verdict{"simulation-passed", kExitCertified} : Verdict{"simulation-failed", kExitUncertified});
    if (r_["oracles"]["simulation"]["diverged"].get<int>() > 0) flag("divergence detected (||x|| > 1e12)");
  }

  const RunConfig& cfg_;
  const RunOptions& opts_;
  PlantModel plant_;
  ordered_json r_;
  double lmi_seconds_ = 0.0;
  double oracle_seconds_ = 0.0;
};

}  // namespace

RunReport run(const RunConfig& cfg, const RunOptions& options) { return Runner(cfg, options).go(); }

}  // namespace delaysof
