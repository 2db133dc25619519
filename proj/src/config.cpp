#include "delaysof/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace delaysof {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) fail(path + "/" + it.key(), "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

Eigen::MatrixXd matrix(const json& v, const std::string& path) {
  if (v.is_number()) return Eigen::MatrixXd::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd M;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<size_t>(i)];
    const std::string rp = path + "/" + std::to_string(i);
    if (!row.is_array() || row.empty()) fail(rp, "expected a non-empty row array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(rp, "ragged matrix");
    }
    for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = number(row[static_cast<size_t>(k)], rp + "/" + std::to_string(k));
  }
  return M;
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Design: return "design";
    case RunMode::Analyze: return "analyze";
    case RunMode::MaxDelayDesign: return "maxdelay-design";
    case RunMode::MaxDelayAnalyze: return "maxdelay-analyze";
    case RunMode::Simulate: return "simulate";
    case RunMode::Verify: return "verify";
  }
  return "?";
}

RunMode parse_mode(const std::string& text) {
  for (RunMode m : {RunMode::Design, RunMode::Analyze, RunMode::MaxDelayDesign, RunMode::MaxDelayAnalyze,
                    RunMode::Simulate, RunMode::Verify}) {
    if (to_string(m) == text) return m;
  }
  fail("/mode", "unknown mode '" + text + "'");
}

bool is_design_mode(RunMode mode) { return mode == RunMode::Design || mode == RunMode::MaxDelayDesign; }

bool needs_gain(RunMode mode) { return !is_design_mode(mode); }

PlantModel PlantSpec::build() const {
  Eigen::MatrixXd Ad, Bd;
  if (A && B) {
    Ad = *A;
    Bd = *B;
  } else {
    std::tie(Ad, Bd) = discretize_zoh(*Ac, *Bc, *Ts);
  }
  const Eigen::MatrixXd Cm = C ? *C : Eigen::MatrixXd::Identity(Ad.rows(), Ad.rows());
  return PlantModel(Ad, Bd, Cm);
}

RhoGrid RunConfig::effective_grid() const { return rho ? RhoGrid::single(*rho) : *rho_grid; }

RunConfig parse_config(const json& j) {
  only_keys(j, "", {"mode", "plant", "bounds", "rho", "rho_grid", "gain", "reference_gain", "solver", "simulation",
                    "verify", "outputs"});
  RunConfig cfg;
  const json* mode = find(j, "mode");
  if (!mode || !mode->is_string()) fail("/mode", "required string");
  cfg.mode = parse_mode(mode->get<std::string>());

  const json* plant = find(j, "plant");
  if (!plant) fail("/plant", "required");
  only_keys(*plant, "/plant", {"A", "B", "C", "Ac", "Bc", "Ts"});
  auto& ps = cfg.plant;
  for (auto [key, slot] : {std::pair{"A", &ps.A}, {"B", &ps.B}, {"C", &ps.C}, {"Ac", &ps.Ac}, {"Bc", &ps.Bc}}) {
    if (const json* v = find(*plant, key)) *slot = matrix(*v, std::string("/plant/") + key);
  }
  if (const json* v = find(*plant, "Ts")) ps.Ts = number(*v, "/plant/Ts");
  const bool discrete = ps.A || ps.B;
  const bool continuous = ps.Ac || ps.Bc || ps.Ts;
  if (discrete == continuous) fail("/plant", "give either A and B, or Ac, Bc and Ts");
  if (discrete && !(ps.A && ps.B)) fail("/plant", "A and B are both required");
  if (continuous && !(ps.Ac && ps.Bc && ps.Ts)) fail("/plant", "Ac, Bc and Ts are all required");
  try {
    (void)ps.build();
  } catch (const std::exception& e) {
    fail("/plant", e.what());
  }

  const bool maxdelay = cfg.mode == RunMode::MaxDelayDesign || cfg.mode == RunMode::MaxDelayAnalyze;
  const json* bounds = find(j, "bounds");
  if (!bounds) fail("/bounds", "required");
  only_keys(*bounds, "/bounds", {"d_min", "d_max", "d_cap"});
  const json* dmin = find(*bounds, "d_min");
  if (!dmin) fail("/bounds/d_min", "required");
  cfg.d_min = integer(*dmin, "/bounds/d_min");
  if (maxdelay) {
    const json* cap = find(*bounds, "d_cap");
    if (!cap) fail("/bounds/d_cap", "required in " + to_string(cfg.mode) + " mode");
    if (find(*bounds, "d_max")) fail("/bounds/d_max", "not used in " + to_string(cfg.mode) + " mode");
    cfg.d_cap = integer(*cap, "/bounds/d_cap");
    cfg.d_max = cfg.d_cap;
    if (cfg.d_cap < cfg.d_min) fail("/bounds/d_cap", "must be >= d_min");
  } else {
    const json* dmax = find(*bounds, "d_max");
    if (!dmax) fail("/bounds/d_max", "required");
    if (find(*bounds, "d_cap")) fail("/bounds/d_cap", "only used in maxdelay modes");
    cfg.d_max = integer(*dmax, "/bounds/d_max");
    cfg.d_cap = cfg.d_max;
  }
  try {
    (void)DelayBounds(cfg.d_min, cfg.d_max);
  } catch (const std::exception& e) {
    fail("/bounds", e.what());
  }

  const json* rho = find(j, "rho");
  const json* grid = find(j, "rho_grid");
  if (is_design_mode(cfg.mode)) {
    if ((rho != nullptr) == (grid != nullptr)) fail("/rho", "design modes need exactly one of rho and rho_grid");
  } else if (rho || grid) {
    fail(rho ? "/rho" : "/rho_grid", "only used in design modes");
  }
  if (rho) cfg.rho = number(*rho, "/rho");
  if (grid) {
    only_keys(*grid, "/rho_grid", {"from", "to", "step"});
    RhoGrid g;
    for (auto [key, slot] : {std::pair{"from", &g.from}, {"to", &g.to}, {"step", &g.step}}) {
      const json* v = find(*grid, key);
      if (!v) fail(std::string("/rho_grid/") + key, "required");
      *slot = number(*v, std::string("/rho_grid/") + key);
    }
    try {
      (void)g.values();
    } catch (const std::exception& e) {
      fail("/rho_grid", e.what());
    }
    cfg.rho_grid = g;
  }

  const PlantModel model = ps.build();
  auto read_gain = [&](const char* key) -> std::optional<Eigen::MatrixXd> {
    const json* v = find(j, key);
    if (!v) return std::nullopt;
    const std::string path = std::string("/") + key;
    Eigen::MatrixXd K = matrix(*v, path);
    if (K.rows() != model.m() || K.cols() != model.p()) {
      fail(path, "expected " + std::to_string(model.m()) + "x" + std::to_string(model.p()));
    }
    return K;
  };
  cfg.gain = read_gain("gain");
  cfg.reference_gain = read_gain("reference_gain");
  if (needs_gain(cfg.mode) && !cfg.gain) fail("/gain", "required in " + to_string(cfg.mode) + " mode");
  if (!needs_gain(cfg.mode) && cfg.gain) fail("/gain", "not used in " + to_string(cfg.mode) + " mode");

  if (const json* s = find(j, "solver")) {
    only_keys(*s, "/solver", {"epsilon_feas", "epsilon_check", "kappa", "max_iter", "tol", "certificate_tol"});
    auto& o = cfg.solver;
    for (auto [key, slot] : {std::pair{"epsilon_feas", &o.epsilon_feas}, {"epsilon_check", &o.epsilon_check},
                             {"kappa", &o.kappa}, {"tol", &o.tol}, {"certificate_tol", &o.certificate_tol}}) {
      if (const json* v = find(*s, key)) {
        *slot = number(*v, std::string("/solver/") + key);
        if (!(*slot > 0.0)) fail(std::string("/solver/") + key, "must be positive");
      }
    }
    if (const json* v = find(*s, "max_iter")) {
      o.max_iter = integer(*v, "/solver/max_iter");
      if (o.max_iter < 1) fail("/solver/max_iter", "must be >= 1");
    }
  }

  if (const json* s = find(j, "simulation")) {
    only_keys(*s, "/simulation", {"enabled", "seeds", "steps", "threshold", "random_histories", "bang_bang", "base_seed"});
    auto& o = cfg.simulation;
    if (const json* v = find(*s, "enabled")) {
      if (!v->is_boolean()) fail("/simulation/enabled", "expected a boolean");
      cfg.simulation_enabled = v->get<bool>();
    }
    if (const json* v = find(*s, "seeds")) o.seeds = integer(*v, "/simulation/seeds");
    if (const json* v = find(*s, "steps")) {
      if (v->is_string() && v->get<std::string>() == "auto") {
        o.steps = 0;
      } else {
        o.steps = integer(*v, "/simulation/steps");
        if (o.steps < 1) fail("/simulation/steps", "must be >= 1 or \"auto\"");
      }
    }
    if (const json* v = find(*s, "threshold")) o.threshold = number(*v, "/simulation/threshold");
    if (const json* v = find(*s, "random_histories")) o.random_histories = integer(*v, "/simulation/random_histories");
    if (const json* v = find(*s, "bang_bang")) {
      if (!v->is_boolean()) fail("/simulation/bang_bang", "expected a boolean");
      o.bang_bang = v->get<bool>();
    }
    if (const json* v = find(*s, "base_seed")) {
      if (!v->is_number_unsigned()) fail("/simulation/base_seed", "expected a non-negative integer");
      o.base_seed = v->get<std::uint64_t>();
    }
    if (o.seeds < 0) fail("/simulation/seeds", "must be >= 0");
    if (o.random_histories < 0) fail("/simulation/random_histories", "must be >= 0");
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) fail("/simulation/threshold", "must lie in (0, 1)");
  }

  if (const json* s = find(j, "verify")) {
    only_keys(*s, "/verify", {"chain_samples"});
    if (const json* v = find(*s, "chain_samples")) {
      cfg.chain_samples = integer(*v, "/verify/chain_samples");
      if (cfg.chain_samples < 0) fail("/verify/chain_samples", "must be >= 0");
    }
  }

  if (const json* s = find(j, "outputs")) {
    only_keys(*s, "/outputs", {"report", "trajectory_csv"});
    if (const json* v = find(*s, "report")) {
      if (!v->is_string()) fail("/outputs/report", "expected a string");
      cfg.report_path = v->get<std::string>();
    }
    if (const json* v = find(*s, "trajectory_csv")) {
      if (!v->is_string()) fail("/outputs/trajectory_csv", "expected a string");
      cfg.trajectory_path = v->get<std::string>();
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const std::optional<std::string>& mode) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    if (mode) {
      if (!j.is_object()) fail("", "expected an object");
      if (!j.contains("mode")) j["mode"] = *mode;
      else if (j["mode"] != *mode) fail("/mode", "config says " + j["mode"].dump() + " but the command line says \"" + *mode + "\"");
    }
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["mode"] = to_string(cfg.mode);
  ordered_json plant = ordered_json::object();
  const auto& ps = cfg.plant;
  if (ps.A) {
    plant["A"] = matrix_to_json(*ps.A);
    plant["B"] = matrix_to_json(*ps.B);
  } else {
    plant["Ac"] = matrix_to_json(*ps.Ac);
    plant["Bc"] = matrix_to_json(*ps.Bc);
    plant["Ts"] = *ps.Ts;
  }
  if (ps.C) plant["C"] = matrix_to_json(*ps.C);
  j["plant"] = plant;
  const bool maxdelay = cfg.mode == RunMode::MaxDelayDesign || cfg.mode == RunMode::MaxDelayAnalyze;
  j["bounds"] = maxdelay ? ordered_json{{"d_min", cfg.d_min}, {"d_cap", cfg.d_cap}}
                         : ordered_json{{"d_min", cfg.d_min}, {"d_max", cfg.d_max}};
  if (cfg.rho) j["rho"] = *cfg.rho;
  if (cfg.rho_grid) j["rho_grid"] = {{"from", cfg.rho_grid->from}, {"to", cfg.rho_grid->to}, {"step", cfg.rho_grid->step}};
  if (cfg.gain) j["gain"] = matrix_to_json(*cfg.gain);
  if (cfg.reference_gain) j["reference_gain"] = matrix_to_json(*cfg.reference_gain);
  const auto& s = cfg.solver;
  j["solver"] = {{"epsilon_feas", s.epsilon_feas}, {"epsilon_check", s.epsilon_check}, {"kappa", s.kappa},
                 {"max_iter", s.max_iter}, {"tol", s.tol}, {"certificate_tol", s.certificate_tol}};
  const auto& o = cfg.simulation;
  ordered_json sim;
  sim["enabled"] = cfg.simulation_enabled;
  sim["seeds"] = o.seeds;
  if (o.steps > 0) sim["steps"] = o.steps;
  else sim["steps"] = "auto";
  sim["threshold"] = o.threshold;
  sim["random_histories"] = o.random_histories;
  sim["bang_bang"] = o.bang_bang;
  sim["base_seed"] = o.base_seed;
  j["simulation"] = sim;
  j["verify"] = {{"chain_samples", cfg.chain_samples}};
  ordered_json out = ordered_json::object();
  if (!cfg.report_path.empty()) out["report"] = cfg.report_path;
  if (!cfg.trajectory_path.empty()) out["trajectory_csv"] = cfg.trajectory_path;
  j["outputs"] = out;
  return j;
}

ordered_json defaults_table() {
  const SolverOptions s;
  const RunConfig c;
  const RhoGrid g;
  ordered_json j;
  j["epsilon_feas"] = s.epsilon_feas;
  j["epsilon_check"] = s.epsilon_check;
  j["certificate_tol"] = s.certificate_tol;
  j["kappa"] = s.kappa;
  j["max_iter"] = s.max_iter;
  j["tol"] = s.tol;
  j["rho_grid"] = {{"from", g.from}, {"to", g.to}, {"step", g.step}};
  j["simulation_seeds"] = c.simulation.seeds;
  j["simulation_steps"] = "auto: max(500, ceil(2 ln(threshold) / ln(max spectral radius)))";
  j["simulation_threshold"] = c.simulation.threshold;
  j["random_histories"] = c.simulation.random_histories;
  j["bang_bang_sequences"] = 2;
  j["divergence_guard"] = 1e12;
  j["chain_samples"] = c.chain_samples;
  j["chain_slack"] = "1e-8 * (1 + |dV|)";
  j["spectral_threshold"] = "1 - 1e-9";
  j["max_r_condition"] = 1e10;
  return j;
}

}  // namespace delaysof
