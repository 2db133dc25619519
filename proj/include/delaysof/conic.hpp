#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "delaysof/lmi_system.hpp"

namespace delaysof {

enum class BlockKind {
  Constraint,  // one LMI of the source system, shifted by -t I
  Box,         // kappa bound on one variable block
  MarginCap,   // kappa - t >= 0
};

/// One PSD cone block: smat(constant + coeffs * y) >= 0.
struct PsdBlock {
  std::string name;
  BlockKind kind = BlockKind::Constraint;
  int size = 0;
  Eigen::VectorXd constant;  // svec, length size(size+1)/2
  Eigen::MatrixXd coeffs;    // svec rows x num_scalar_vars
};

/// Standard-form problem: maximize objective . y subject to every block PSD.
struct SvecProblem {
  std::shared_ptr<const LmiSystem> source;
  int num_scalar_vars = 0;
  std::vector<int> var_offsets;  // first coordinate of each layout variable
  int margin_index = -1;         // coordinate of t
  std::vector<PsdBlock> blocks;
  Eigen::VectorXd objective;
  double kappa = 1e3;

  Assignment unpack(const Eigen::VectorXd& y) const;
  Eigen::VectorXd pack(const Assignment& values, double margin) const;
};

SvecProblem compile(const LmiSystem& sys);

struct SolverOptions {
  double epsilon_feas = 1e-7;   // accept iff t* >= epsilon_feas
  double epsilon_check = 1e-6;  // re-evaluation slack against t*
  double kappa = 1e3;
  int max_iter = 120;
  double tol = 1e-10;           // interior-point stopping tolerance
  double certificate_tol = 1e-7;  // Infeasible iff the dual margin bound is below this
};

enum class SolveStatus { FeasibleCertified, Infeasible, Inconclusive };
std::string to_string(SolveStatus s);

struct SolverStats {
  std::string adapter;
  std::string adapter_status;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double wall_seconds = 0.0;
  double min_constraint_eig = 0.0;  // independent re-evaluation
  double margin_upper_bound = 0.0;  // from the duals, re-evaluated; +inf when unavailable
  std::string message;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Inconclusive;
  double margin = 0.0;
  Assignment values;
  SolverStats stats;
};

/// Raw output of a conic back end. `dual_blocks` holds one matrix per
/// problem block (may be empty when the adapter provides no duals).
struct AdapterOutput {
  enum class Status { Converged, Stalled, MaxIterations, NumericalFailure };
  // Stalled: no further progress but residuals already small; best iterate returned.
  Status status = Status::NumericalFailure;
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> dual_blocks;
  // Extra multiplier sets (e.g. late iterates); any of them may give a tighter bound.
  std::vector<std::vector<Eigen::MatrixXd>> dual_candidates;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string message;
};

class SdpAdapter {
 public:
  virtual ~SdpAdapter() = default;
  virtual std::string name() const = 0;
  virtual AdapterOutput solve(const SvecProblem& problem, const SolverOptions& options) const = 0;
};

/// Adapter named by DELAYSOF_SOLVER (default "ipm"); throws EnvironmentError
/// for unknown names.
std::shared_ptr<const SdpAdapter> default_adapter();
std::shared_ptr<const SdpAdapter> make_adapter(const std::string& name);

/// Runs the adapter and certifies the result by re-evaluating every
/// constraint of the source system. Never throws on solver failure.
SolveResult solve(const SvecProblem& problem, const SolverOptions& options,
                  const SdpAdapter& adapter);
SolveResult solve(const SvecProblem& problem, const SolverOptions& options = {});

/// Convenience: compile with options.kappa and solve.
SolveResult solve_system(LmiSystem sys, const SolverOptions& options = {});

/// Smallest eigenvalue of every source constraint at `values`.
std::vector<double> constraint_min_eigenvalues(const LmiSystem& sys, const Assignment& values);

/// Upper bound on the margin t attainable inside the kappa box, from one
/// multiplier X_j per source constraint (projected onto the PSD cone and
/// normalized to unit total trace):
///   t <= sum_j <E_j(V), X_j> <= sum_j <E_j(0), X_j> + kappa * sum_v ||adj_v||_*.
/// Evaluated from the source expressions only. +inf when the multipliers vanish.
double margin_upper_bound(const LmiSystem& sys, const std::vector<Eigen::MatrixXd>& multipliers);

/// Sparse SDPA-like dump: m, nblocks, block sizes, objective, then
/// "constraint block row col value" (1-indexed, upper triangle).
void write_sdpa(const SvecProblem& problem, std::ostream& out);

}  // namespace delaysof
