#include "delaysof/conic.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "delaysof/errors.hpp"
#include "delaysof/interior_point.hpp"
#include "delaysof/svec.hpp"

namespace delaysof {

namespace {

Eigen::MatrixXd sym(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// Matrix value of one unit coordinate of a variable.
Eigen::MatrixXd unit_value(const VariableDescriptor& v, int k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(v.num_coordinates());
  e(k) = 1.0;
  return unpack_variable(v, e);
}

double min_eig(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(M), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver failed");
  return es.eigenvalues()(0);
}

double nuclear_norm(const Eigen::MatrixXd& G) {
  if (G.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  return svd.singularValues().sum();
}

std::string adapter_status_name(AdapterOutput::Status s) {
  switch (s) {
    case AdapterOutput::Status::Converged:
      return "converged";
    case AdapterOutput::Status::Stalled:
      return "stalled";
    case AdapterOutput::Status::MaxIterations:
      return "max-iterations";
    case AdapterOutput::Status::NumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::FeasibleCertified:
      return "feasible-certified";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

Assignment SvecProblem::unpack(const Eigen::VectorXd& y) const {
  if (y.size() != num_scalar_vars) throw ContractError("SvecProblem::unpack: bad length");
  const auto& layout = source->layout;
  Assignment out;
  out.reserve(static_cast<size_t>(layout.size()));
  for (int v = 0; v < layout.size(); ++v) {
    out.push_back(unpack_variable(layout[v], y.segment(var_offsets[v], layout[v].num_coordinates())));
  }
  return out;
}

Eigen::VectorXd SvecProblem::pack(const Assignment& values, double margin) const {
  const auto& layout = source->layout;
  if (static_cast<int>(values.size()) != layout.size()) throw ContractError("SvecProblem::pack: bad assignment");
  Eigen::VectorXd y(num_scalar_vars);
  for (int v = 0; v < layout.size(); ++v) {
    y.segment(var_offsets[v], layout[v].num_coordinates()) = pack_variable(layout[v], values[v]);
  }
  y(margin_index) = margin;
  return y;
}

SvecProblem compile(const LmiSystem& sys) {
  SvecProblem prob;
  prob.source = std::make_shared<const LmiSystem>(sys);
  prob.kappa = sys.norm_bound;
  const auto& layout = sys.layout;

  int offset = 0;
  for (const auto& v : layout.variables()) {
    prob.var_offsets.push_back(offset);
    offset += v.num_coordinates();
  }
  prob.margin_index = offset;
  prob.num_scalar_vars = offset + 1;
  const int N = prob.num_scalar_vars;

  for (const auto& c : sys.constraints) {
    if (!c.expr.references_only(layout)) throw ContractError("compile: constraint " + c.name + " uses unknown variables");
    const int s = c.expr.size();
    PsdBlock b;
    b.name = c.name;
    b.kind = BlockKind::Constraint;
    b.size = s;
    b.constant = svec(sym(c.expr.constant_part()));
    b.coeffs = Eigen::MatrixXd::Zero(svec_length(s), N);
    std::vector<bool> used(static_cast<size_t>(layout.size()), false);
    for (const auto& t : c.expr.terms()) used[static_cast<size_t>(t.var)] = true;
    for (int v = 0; v < layout.size(); ++v) {
      if (!used[static_cast<size_t>(v)]) continue;
      for (int k = 0; k < layout[v].num_coordinates(); ++k) {
        b.coeffs.col(prob.var_offsets[v] + k) = svec(sym(c.expr.evaluate_linear(v, unit_value(layout[v], k))));
      }
    }
    b.coeffs.col(prob.margin_index) = -svec(Eigen::MatrixXd::Identity(s, s));
    prob.blocks.push_back(std::move(b));
  }

  const double kappa = sys.norm_bound;
  for (int v = 0; v < layout.size(); ++v) {
    const auto& var = layout[v];
    if (var.shape == VariableShape::General) {
      // [[kappa I, V], [V^T, kappa I]] >= 0, i.e. ||V||_2 <= kappa
      const int s = var.rows + var.cols;
      PsdBlock b;
      b.name = var.name + "_box";
      b.kind = BlockKind::Box;
      b.size = s;
      b.constant = svec(kappa * Eigen::MatrixXd::Identity(s, s));
      b.coeffs = Eigen::MatrixXd::Zero(svec_length(s), N);
      for (int k = 0; k < var.num_coordinates(); ++k) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(s, s);
        E.topRightCorner(var.rows, var.cols) = unit_value(var, k);
        E = E + E.transpose().eval();
        b.coeffs.col(prob.var_offsets[v] + k) = svec(E);
      }
      prob.blocks.push_back(std::move(b));
      continue;
    }
    for (double sign : {-1.0, 1.0}) {
      const int s = var.rows;
      PsdBlock b;
      b.name = var.name + (sign < 0 ? "_box_upper" : "_box_lower");
      b.kind = BlockKind::Box;
      b.size = s;
      b.constant = svec(kappa * Eigen::MatrixXd::Identity(s, s));
      b.coeffs = Eigen::MatrixXd::Zero(svec_length(s), N);
      for (int k = 0; k < var.num_coordinates(); ++k) {
        b.coeffs.col(prob.var_offsets[v] + k) = sign * svec(unit_value(var, k));
      }
      prob.blocks.push_back(std::move(b));
    }
  }

  PsdBlock cap;
  cap.name = "margin_cap";
  cap.kind = BlockKind::MarginCap;
  cap.size = 1;
  cap.constant = Eigen::VectorXd::Constant(1, kappa);
  cap.coeffs = Eigen::MatrixXd::Zero(1, N);
  cap.coeffs(0, prob.margin_index) = -1.0;
  prob.blocks.push_back(std::move(cap));

  prob.objective = Eigen::VectorXd::Zero(N);
  prob.objective(prob.margin_index) = 1.0;
  return prob;
}

std::vector<double> constraint_min_eigenvalues(const LmiSystem& sys, const Assignment& values) {
  std::vector<double> out;
  out.reserve(sys.constraints.size());
  for (const auto& c : sys.constraints) out.push_back(min_eig(c.expr.evaluate(values)));
  return out;
}

namespace {

// Bound from PSD multipliers already normalized to unit total trace.
double bound_from(const LmiSystem& sys, const std::vector<Eigen::MatrixXd>& X) {
  const auto& layout = sys.layout;
  double c0 = 0.0;
  Assignment grad = zero_assignment(layout);
  for (size_t j = 0; j < X.size(); ++j) {
    const auto& e = sys.constraints[j].expr;
    c0 += (e.constant_part().array() * X[j].array()).sum();
    const Assignment g = e.adjoint(layout, X[j]);
    for (size_t v = 0; v < g.size(); ++v) grad[v] += g[v];
  }
  double slack = 0.0;
  for (const auto& g : grad) slack += nuclear_norm(g);
  return c0 + sys.norm_bound * slack;
}

// PSD part, scaled to unit total trace; false when nothing is left.
bool normalize_psd(std::vector<Eigen::MatrixXd>& X) {
  double total = 0.0;
  for (auto& M : X) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(M));
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    M = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    total += lam.sum();
  }
  if (!(total > 0.0) || !std::isfinite(total)) return false;
  for (auto& M : X) M /= total;
  return true;
}

}  // namespace

double margin_upper_bound(const LmiSystem& sys, const std::vector<Eigen::MatrixXd>& multipliers) {
  if (multipliers.size() != sys.constraints.size()) throw ContractError("margin_upper_bound: one multiplier per constraint");
  for (size_t j = 0; j < multipliers.size(); ++j) {
    const int s = sys.constraints[j].expr.size();
    if (multipliers[j].rows() != s || multipliers[j].cols() != s) {
      throw ContractError("margin_upper_bound: multiplier shape for " + sys.constraints[j].name);
    }
  }
  std::vector<Eigen::MatrixXd> X = multipliers;
  if (!normalize_psd(X)) return std::numeric_limits<double>::infinity();
  double best = bound_from(sys, X);

  // Any PSD multiplier gives a valid bound, so it pays to remove the part of X
  // the variables can see (projection onto the null space of the adjoint).
  const SvecProblem prob = compile(sys);
  const int nv = prob.num_scalar_vars - 1;
  std::vector<Eigen::Index> rows;
  Eigen::Index total_rows = 0;
  for (size_t j = 0; j < X.size(); ++j) {
    rows.push_back(total_rows);
    total_rows += prob.blocks[j].coeffs.rows();
  }
  Eigen::MatrixXd Ac(total_rows, nv);
  for (size_t j = 0; j < X.size(); ++j) {
    Ac.middleRows(rows[j], prob.blocks[j].coeffs.rows()) = prob.blocks[j].coeffs.leftCols(nv);
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Ac);
  int stale = 0;
  for (int pass = 0; pass < 60 && stale < 4; ++pass) {
    Eigen::VectorXd x(total_rows);
    for (size_t j = 0; j < X.size(); ++j) x.segment(rows[j], prob.blocks[j].coeffs.rows()) = svec(sym(X[j]));
    x -= Ac * cod.solve(x);
    for (size_t j = 0; j < X.size(); ++j) X[j] = smat(x.segment(rows[j], prob.blocks[j].coeffs.rows()));
    if (!normalize_psd(X)) break;
    const double b = bound_from(sys, X);
    stale = b < 0.9 * best ? 0 : stale + 1;
    best = std::min(best, b);
  }
  return best;
}

std::shared_ptr<const SdpAdapter> make_adapter(const std::string& name) {
  if (name == "ipm") return std::make_shared<InteriorPointAdapter>();
  throw EnvironmentError("unknown solver adapter '" + name + "' (available: ipm)");
}

std::shared_ptr<const SdpAdapter> default_adapter() {
  const char* env = std::getenv("DELAYSOF_SOLVER");
  return make_adapter(env && *env ? std::string(env) : std::string("ipm"));
}

SolveResult solve(const SvecProblem& problem, const SolverOptions& options, const SdpAdapter& adapter) {
  SolveResult res;
  res.stats.adapter = adapter.name();
  res.stats.margin_upper_bound = std::numeric_limits<double>::infinity();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  AdapterOutput out;
  try {
    out = adapter.solve(problem, options);
  } catch (const std::exception& e) {
    res.stats.adapter_status = "exception";
    res.stats.message = e.what();
    res.stats.wall_seconds = elapsed();
    return res;
  }
  res.stats.adapter_status = adapter_status_name(out.status);
  res.stats.iterations = out.iterations;
  res.stats.primal_residual = out.primal_residual;
  res.stats.dual_residual = out.dual_residual;
  res.stats.gap = out.gap;
  res.stats.message = out.message;

  const LmiSystem& sys = *problem.source;
  if (out.y.size() != problem.num_scalar_vars || !out.y.allFinite()) {
    res.stats.message += res.stats.message.empty() ? "no usable primal point" : "; no usable primal point";
    res.stats.wall_seconds = elapsed();
    return res;
  }

  try {
    res.values = problem.unpack(out.y);
    res.margin = out.y(problem.margin_index);
    const auto eigs = constraint_min_eigenvalues(sys, res.values);
    double lo = std::numeric_limits<double>::infinity();
    for (double e : eigs) lo = std::min(lo, e);
    res.stats.min_constraint_eig = lo;

    const double t = res.margin;
    if (t >= options.epsilon_feas && lo >= t - options.epsilon_check && lo >= options.epsilon_feas) {
      res.status = SolveStatus::FeasibleCertified;
    } else {
      // Not certified: see whether the multipliers prove that no point of the
      // kappa box reaches the acceptance margin.
      std::vector<std::vector<Eigen::MatrixXd>> sets = out.dual_candidates;
      sets.push_back(out.dual_blocks);
      for (const auto& d : sets) {
        if (d.size() < sys.constraints.size()) continue;
        std::vector<Eigen::MatrixXd> mult(d.begin(), d.begin() + static_cast<long>(sys.constraints.size()));
        res.stats.margin_upper_bound = std::min(res.stats.margin_upper_bound, margin_upper_bound(sys, mult));
      }
      const bool proven = res.stats.margin_upper_bound < options.certificate_tol;
      const bool negative = (out.status == AdapterOutput::Status::Converged || out.status == AdapterOutput::Status::Stalled) &&
                            t < -options.epsilon_feas;
      res.status = proven || negative ? SolveStatus::Infeasible : SolveStatus::Inconclusive;
    }
  } catch (const std::exception& e) {
    res.status = SolveStatus::Inconclusive;
    res.stats.message = std::string("verification failed: ") + e.what();
  }
  res.stats.wall_seconds = elapsed();
  return res;
}

SolveResult solve(const SvecProblem& problem, const SolverOptions& options) {
  return solve(problem, options, *default_adapter());
}

SolveResult solve_system(LmiSystem sys, const SolverOptions& options) {
  sys.norm_bound = options.kappa;
  return solve(compile(sys), options);
}

void write_sdpa(const SvecProblem& problem, std::ostream& out) {
  // SDPA convention: min c.x s.t. sum_i F_i x_i - F_0 >= 0.
  // Here c = -objective, F_i = block coefficients, F_0 = -constant.
  out.precision(17);
  out << problem.num_scalar_vars << "\n" << problem.blocks.size() << "\n";
  for (size_t b = 0; b < problem.blocks.size(); ++b) out << (b ? " " : "") << problem.blocks[b].size;
  out << "\n";
  for (int i = 0; i < problem.num_scalar_vars; ++i) out << (i ? " " : "") << -problem.objective(i);
  out << "\n";
  auto emit = [&](int mat, int blk, const Eigen::VectorXd& v) {
    const Eigen::MatrixXd M = smat(v);
    for (int r = 0; r < M.rows(); ++r)
      for (int c = r; c < M.cols(); ++c)
        if (M(r, c) != 0.0) out << mat << " " << blk << " " << r + 1 << " " << c + 1 << " " << M(r, c) << "\n";
  };
  for (size_t b = 0; b < problem.blocks.size(); ++b) {
    const auto& blk = problem.blocks[b];
    emit(0, static_cast<int>(b) + 1, -blk.constant);
    for (int i = 0; i < problem.num_scalar_vars; ++i) {
      if (blk.coeffs.col(i).cwiseAbs().maxCoeff() == 0.0) continue;
      emit(i + 1, static_cast<int>(b) + 1, blk.coeffs.col(i));
    }
  }
}

}  // namespace delaysof
