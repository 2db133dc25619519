#include "delaysof/lmi_system.hpp"

#include "delaysof/errors.hpp"

namespace delaysof {

namespace {

using Eigen::MatrixXd;

// rows x width selector placing a width-sized block at `offset`.
MatrixXd selector(int rows, int offset, int width) {
  MatrixXd E = MatrixXd::Zero(rows, width);
  E.block(offset, 0, width, width).setIdentity();
  return E;
}

void add_lkf_variables(DecisionLayout& layout, int n) {
  layout.add({"P", 3 * n, 3 * n, VariableShape::Symmetric, true});
  layout.add({"W1", n, n, VariableShape::Symmetric, true});
  layout.add({"W2", n, n, VariableShape::Symmetric, true});
  layout.add({"Z1", n, n, VariableShape::Symmetric, true});
  layout.add({"Z2", n, n, VariableShape::Symmetric, true});
  layout.add({"X", 2 * n, 2 * n, VariableShape::General, false});
}

AffineMatrixExpr positivity(const DecisionLayout& layout, int var) {
  const auto& v = layout[var];
  const int s = v.shape == VariableShape::Scalar ? 1 : v.rows;
  AffineMatrixExpr e(s);
  e.add_term(var, MatrixXd::Identity(s, s), MatrixXd::Identity(s, s));
  return e;
}

void check_inputs(const PlantModel& plant, const DelayBounds& bounds, double kappa) {
  (void)plant;
  (void)bounds;
  if (!(kappa > 0.0)) throw ContractError("norm bound kappa must be positive");
}

}  // namespace

DecisionLayout make_design_layout(int n, int m, int p) {
  DecisionLayout layout;
  add_lkf_variables(layout, n);
  layout.add({"Q", p, p, VariableShape::Symmetric, false});
  layout.add({"R", m, m, VariableShape::Symmetric, true});
  layout.add({"S", p, m, VariableShape::General, false});
  return layout;
}

DecisionLayout make_analysis_layout(int n, int m, int p) {
  DecisionLayout layout;
  add_lkf_variables(layout, n);
  layout.add({"Q", p, p, VariableShape::Symmetric, false});
  layout.add({"Ls", p + m, m, VariableShape::General, false});
  layout.add({"r", 1, 1, VariableShape::Scalar, true});
  return layout;
}

const NamedConstraint& LmiSystem::constraint(const std::string& name) const {
  for (const auto& c : constraints) {
    if (c.name == name) return c;
  }
  throw ContractError("LmiSystem: no constraint named " + name);
}

AffineMatrixExpr build_psi_z(int n) {
  const int s = 4 * n;
  AffineMatrixExpr psi(s);
  const double weights[4] = {1.0, 3.0, 1.0, 3.0};
  for (int b = 0; b < 4; ++b) {
    const MatrixXd E = selector(s, b * n, n);
    psi.add_term(kVarZ2, weights[b] * E, E);
  }
  psi.add_term(kVarX, selector(s, 0, 2 * n), selector(s, 2 * n, 2 * n), /*symmetrize=*/true);
  return psi;
}

AffineMatrixExpr build_phi(const SelectorBank& sel, const DelayBounds& bounds, int d) {
  const int n = sel.n;
  const int s = sel.xi_size();
  const double dm = bounds.d_min();
  const double dD = bounds.d_delta();
  const MatrixXd Fd = sel.F_of_d(d);
  auto block = [&](int b) { return selector(s, b * n, n); };

  AffineMatrixExpr phi(s);
  // Exact forward difference of w^T P w.
  phi.add_term(kVarP, sel.F2.transpose(), sel.F2.transpose());
  phi.add_term(kVarP, -sel.F1.transpose(), sel.F1.transpose());
  phi.add_term(kVarP, Fd.transpose(), (sel.F2 - sel.F1).transpose(), /*symmetrize=*/true);

  // W = diag(0, W1, W2 - W1, 0, -W2, 0, 0, 0)
  phi.add_term(kVarW1, block(kNow), block(kNow));
  phi.add_term(kVarW1, -block(kLagMin), block(kLagMin));
  phi.add_term(kVarW2, block(kLagMin), block(kLagMin));
  phi.add_term(kVarW2, -block(kLagMax), block(kLagMax));

  phi.add_term(kVarZ1, dm * dm * sel.F3.transpose(), sel.F3.transpose());
  phi.add_term(kVarZ2, dD * dD * sel.F3.transpose(), sel.F3.transpose());

  // -Fs^T diag(Z1, 3 gamma(d_min) Z1) Fs
  const MatrixXd FsTop = sel.Fs.transpose() * selector(2 * n, 0, n);
  const MatrixXd FsBot = sel.Fs.transpose() * selector(2 * n, n, n);
  phi.add_term(kVarZ1, -FsTop, FsTop);
  phi.add_term(kVarZ1, -3.0 * gamma(bounds.d_min()) * FsBot, FsBot);

  phi += -build_psi_z(n).congruence(sel.FPsi);
  return phi;
}

AffineMatrixExpr build_upsilon(const PlantModel& plant) {
  const SelectorBank sel = build_selectors(plant.n(), plant.m(), DelayBounds(1, 1));
  const MatrixXd E4C = sel.zeta_embedding(kLagCur) * plant.C().transpose();
  const MatrixXd E9 = sel.zeta_embedding(kInput);

  AffineMatrixExpr ups(sel.zeta_size());
  ups.add_term(kVarQ, -E4C, E4C);
  ups.add_term(kVarR, -E9, E9);
  ups.add_term(kVarS, -E4C, E9, /*symmetrize=*/true);
  return ups;
}

AffineMatrixExpr build_upsilon_for_gain(const PlantModel& plant, const FeedbackGain& K) {
  K.check_compatible(plant);
  const SelectorBank sel = build_selectors(plant.n(), plant.m(), DelayBounds(1, 1));
  const MatrixXd E4C = sel.zeta_embedding(kLagCur) * plant.C().transpose();
  const MatrixXd E9 = sel.zeta_embedding(kInput);

  AffineMatrixExpr ups(sel.zeta_size());
  ups.add_term(kVarQ, -E4C, E4C);
  ups.add_term(kVarScale, -E9, E9);                                         // -R = -r I
  ups.add_term(kVarScale, E4C * K.K().transpose(), E9, /*symmetrize=*/true);  // S = -r K^T
  return ups;
}

AffineMatrixExpr build_vertex(const PlantModel& plant, const SelectorBank& sel, const DelayBounds& bounds,
                              const AffineMatrixExpr& upsilon, int d) {
  const MatrixXd lift = MatrixXd::Identity(sel.xi_size(), sel.zeta_size());  // diag(Phi, 0_m)
  AffineMatrixExpr full = build_phi(sel, bounds, d).congruence(lift);
  full += upsilon;
  return full.congruence(gamma_perp(plant));
}

LmiSystem build_design_system(const PlantModel& plant, const DelayBounds& bounds, double rho, double kappa) {
  check_inputs(plant, bounds, kappa);
  const int n = plant.n(), m = plant.m(), p = plant.p();

  LmiSystem sys;
  sys.kind = SystemKind::Design;
  sys.layout = make_design_layout(n, m, p);
  sys.norm_bound = kappa;
  sys.n = n;
  sys.m = m;
  sys.p = p;
  sys.bounds = bounds;
  sys.rho = rho;

  for (int v : {kVarP, kVarW1, kVarW2, kVarZ1, kVarZ2, kVarR}) {
    sys.constraints.push_back({sys.layout[v].name, positivity(sys.layout, v)});
  }
  sys.constraints.push_back({"Psi_z", build_psi_z(n)});

  const SelectorBank sel = build_selectors(n, m, bounds);
  const AffineMatrixExpr ups = build_upsilon(plant);
  sys.constraints.push_back({"vertex_d_min", -build_vertex(plant, sel, bounds, ups, bounds.d_min())});
  sys.constraints.push_back({"vertex_d_max", -build_vertex(plant, sel, bounds, ups, bounds.d_max())});

  // [[Q + rho 1 S^T + S rho 1^T, *], [rho R 1, -R]] < 0
  const int s = p + m;
  const MatrixXd Ey = selector(s, 0, p);
  const MatrixXd Eu = selector(s, p, m);
  const MatrixXd rho_ones = rho * MatrixXd::Ones(p, m);
  AffineMatrixExpr stab(s);
  stab.add_term(kVarQ, Ey, Ey);
  stab.add_term(kVarS, Ey, Ey * rho_ones, /*symmetrize=*/true);
  stab.add_term(kVarR, Eu, Ey * rho_ones, /*symmetrize=*/true);
  stab.add_term(kVarR, -Eu, Eu);
  sys.constraints.push_back({"stabilization", -stab});
  return sys;
}

LmiSystem build_analysis_system(const PlantModel& plant, const DelayBounds& bounds, const FeedbackGain& K,
                                double kappa) {
  check_inputs(plant, bounds, kappa);
  K.check_compatible(plant);
  const int n = plant.n(), m = plant.m(), p = plant.p();

  LmiSystem sys;
  sys.kind = SystemKind::Analysis;
  sys.layout = make_analysis_layout(n, m, p);
  sys.norm_bound = kappa;
  sys.n = n;
  sys.m = m;
  sys.p = p;
  sys.bounds = bounds;
  sys.gain = K.K();

  for (int v : {kVarP, kVarW1, kVarW2, kVarZ1, kVarZ2, kVarScale}) {
    sys.constraints.push_back({sys.layout[v].name, positivity(sys.layout, v)});
  }
  sys.constraints.push_back({"Psi_z", build_psi_z(n)});

  const SelectorBank sel = build_selectors(n, m, bounds);
  const AffineMatrixExpr ups = build_upsilon_for_gain(plant, K);
  sys.constraints.push_back({"vertex_d_min", -build_vertex(plant, sel, bounds, ups, bounds.d_min())});
  sys.constraints.push_back({"vertex_d_max", -build_vertex(plant, sel, bounds, ups, bounds.d_max())});

  // M_d + Ls C_s + C_s^T Ls^T < 0 with M_d = [[Q, S], [S^T, R]], C_s = [-K, I]
  // (the common factor r of [S^T, R] is absorbed into Ls).
  const int s = p + m;
  const MatrixXd Ey = selector(s, 0, p);
  const MatrixXd Eu = selector(s, p, m);
  MatrixXd Cs(m, s);
  Cs << -K.K(), MatrixXd::Identity(m, m);
  AffineMatrixExpr stab(s);
  stab.add_term(kVarQ, Ey, Ey);
  stab.add_term(kVarScale, -Ey * K.K().transpose(), Eu, /*symmetrize=*/true);
  stab.add_term(kVarScale, Eu, Eu);
  stab.add_term(kVarLs, MatrixXd::Identity(s, s), Cs.transpose(), /*symmetrize=*/true);
  sys.constraints.push_back({"stabilization", -stab});
  return sys;
}

SupplyRate supply_from(const LmiSystem& sys, const Assignment& values) {
  SupplyRate w;
  w.Q = values.at(kVarQ);
  if (sys.kind == SystemKind::Design) {
    w.R = values.at(kVarR);
    w.S = values.at(kVarS);
  } else {
    const double r = values.at(kVarScale)(0, 0);
    w.R = r * MatrixXd::Identity(sys.m, sys.m);
    w.S = -r * sys.gain->transpose();
  }
  return w;
}

nlohmann::ordered_json system_to_json(const LmiSystem& sys) {
  nlohmann::ordered_json j;
  j["kind"] = sys.kind == SystemKind::Design ? "design" : "analysis";
  j["n"] = sys.n;
  j["m"] = sys.m;
  j["p"] = sys.p;
  j["d_min"] = sys.bounds.d_min();
  j["d_max"] = sys.bounds.d_max();
  j["norm_bound"] = sys.norm_bound;
  auto vars = nlohmann::ordered_json::array();
  for (const auto& v : sys.layout.variables()) {
    nlohmann::ordered_json vj;
    vj["name"] = v.name;
    vj["rows"] = v.rows;
    vj["cols"] = v.cols;
    vj["shape"] = v.shape == VariableShape::Symmetric ? "symmetric"
                  : v.shape == VariableShape::General ? "general"
                                                      : "scalar";
    vj["positive"] = v.positive;
    vars.push_back(std::move(vj));
  }
  j["variables"] = std::move(vars);
  auto cons = nlohmann::ordered_json::array();
  for (const auto& c : sys.constraints) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["expr"] = c.expr.to_json(sys.layout);
    cons.push_back(std::move(cj));
  }
  j["constraints"] = std::move(cons);
  return j;
}

}  // namespace delaysof
