#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "delaysof/affine_expr.hpp"
#include "delaysof/model.hpp"
#include "delaysof/selectors.hpp"

namespace delaysof {

// Both layouts start with the functional's variables at fixed indices so that
// build_phi() expressions are valid in either of them.
enum LayoutIndex : int {
  kVarP = 0,   // 3n x 3n
  kVarW1 = 1,  // n x n
  kVarW2 = 2,  // n x n
  kVarZ1 = 3,  // n x n
  kVarZ2 = 4,  // n x n
  kVarX = 5,   // 2n x 2n, general
  kVarQ = 6,   // p x p, sign-indefinite
  // design layout
  kVarR = 7,   // m x m
  kVarS = 8,   // p x m, general
  // analysis layout
  kVarLs = 7,     // (p+m) x m, general
  kVarScale = 8,  // scalar r: R = r I, S = -r K^T
};

DecisionLayout make_design_layout(int n, int m, int p);
DecisionLayout make_analysis_layout(int n, int m, int p);

enum class SystemKind { Design, Analysis };

struct NamedConstraint {
  std::string name;
  AffineMatrixExpr expr;  // required: expr >= t I
};

/// A margin-maximization problem: maximize t subject to every constraint
/// expression being >= t I and every variable block within the kappa box.
struct LmiSystem {
  SystemKind kind = SystemKind::Design;
  DecisionLayout layout;
  std::vector<NamedConstraint> constraints;
  double norm_bound = 1e3;

  // Data the system was built from.
  int n = 0, m = 0, p = 0;
  DelayBounds bounds{1, 1};
  std::optional<double> rho;
  std::optional<Eigen::MatrixXd> gain;

  const NamedConstraint& constraint(const std::string& name) const;
};

/// Phi(d), 8n x 8n, affine in {P, W1, W2, Z1, Z2, X}.
AffineMatrixExpr build_phi(const SelectorBank& sel, const DelayBounds& bounds, int d);

/// Psi_z = [[Z2s, X], [X^T, Z2s]], Z2s = diag(Z2, 3 Z2).
AffineMatrixExpr build_psi_z(int n);

/// Upsilon with Q, S, R as design variables (kVarQ, kVarS, kVarR).
AffineMatrixExpr build_upsilon(const PlantModel& plant);

/// Upsilon with R = r I and S = -r K^T (kVarQ, kVarScale).
AffineMatrixExpr build_upsilon_for_gain(const PlantModel& plant, const FeedbackGain& K);

/// Gamma_perp^T (diag(Phi(d), 0_m) + Upsilon) Gamma_perp, of size 7n + m.
AffineMatrixExpr build_vertex(const PlantModel& plant, const SelectorBank& sel, const DelayBounds& bounds,
                              const AffineMatrixExpr& upsilon, int d);

LmiSystem build_design_system(const PlantModel& plant, const DelayBounds& bounds, double rho,
                              double kappa = 1e3);
LmiSystem build_analysis_system(const PlantModel& plant, const DelayBounds& bounds, const FeedbackGain& K,
                                double kappa = 1e3);

/// Supply-rate matrices implied by a solved system: (Q, S, R).
struct SupplyRate {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd S;
  Eigen::MatrixXd R;
};
SupplyRate supply_from(const LmiSystem& sys, const Assignment& values);

nlohmann::ordered_json system_to_json(const LmiSystem& sys);

}  // namespace delaysof
