#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "delaysof/conic.hpp"
#include "delaysof/errors.hpp"
#include "delaysof/lmi_system.hpp"
#include "delaysof/svec.hpp"
#include "support.hpp"

using namespace delaysof;
using namespace testing_support;

namespace {

// One scalar variable x; constraints given as (constant, coefficient) on 1x1.
LmiSystem scalar_system(const std::vector<std::pair<double, double>>& rows) {
  LmiSystem sys;
  sys.layout.add({"x", 1, 1, VariableShape::Symmetric, false});
  int i = 0;
  for (auto [c, a] : rows) {
    AffineMatrixExpr e(1);
    e.add_constant(Eigen::MatrixXd::Constant(1, 1, c));
    if (a != 0.0) e.add_term(0, Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Identity(1, 1));
    sys.constraints.push_back({"c" + std::to_string(i++), e});
  }
  return sys;
}

class FixedAdapter : public SdpAdapter {
 public:
  explicit FixedAdapter(Eigen::VectorXd y) : y_(std::move(y)) {}
  std::string name() const override { return "fixed"; }
  AdapterOutput solve(const SvecProblem&, const SolverOptions&) const override {
    AdapterOutput out;
    out.status = AdapterOutput::Status::Converged;
    out.y = y_;
    return out;
  }

 private:
  Eigen::VectorXd y_;
};

class ThrowingAdapter : public SdpAdapter {
 public:
  std::string name() const override { return "throwing"; }
  AdapterOutput solve(const SvecProblem&, const SolverOptions&) const override { throw std::runtime_error("boom"); }
};

}  // namespace

TEST(Compile, ScalarCountForOutputFeedbackDesign) {
  const SvecProblem prob = compile(build_design_system(example_sof(), DelayBounds(1, 19), -0.15));
  EXPECT_EQ(prob.num_scalar_vars, 53);
  EXPECT_EQ(prob.margin_index, 52);
  EXPECT_EQ(prob.objective(prob.margin_index), 1.0);
  for (const auto& b : prob.blocks) {
    EXPECT_EQ(b.constant.size(), svec_length(b.size)) << b.name;
    EXPECT_EQ(b.coeffs.rows(), svec_length(b.size)) << b.name;
    EXPECT_EQ(b.coeffs.cols(), prob.num_scalar_vars) << b.name;
  }
}

TEST(Compile, ConstraintBlocksReproduceShiftedExpressions) {
  std::mt19937_64 g(21);
  const LmiSystem sys = build_analysis_system(example_ssf(), DelayBounds(1, 3), FeedbackGain(hu_gain()));
  const SvecProblem prob = compile(sys);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd y = random_matrix(g, prob.num_scalar_vars, 1);
    const Assignment vals = prob.unpack(y);
    EXPECT_LT((prob.pack(vals, y(prob.margin_index)) - y).norm(), 1e-13 * y.norm());
    for (size_t c = 0; c < sys.constraints.size(); ++c) {
      const auto& blk = prob.blocks[c];
      ASSERT_EQ(blk.kind, BlockKind::Constraint);
      const Eigen::MatrixXd got = smat(blk.constant + blk.coeffs * y);
      const Eigen::MatrixXd expect = sys.constraints[c].expr.evaluate(vals) -
                                     y(prob.margin_index) * Eigen::MatrixXd::Identity(blk.size, blk.size);
      EXPECT_LT(rel_err(got, expect), 1e-12) << blk.name;
    }
  }
}

TEST(Compile, BoxBlocksAreKappaAtZero) {
  const SvecProblem prob = compile(build_design_system(example_sof(), DelayBounds(1, 2), -0.15, 50.0));
  int boxes = 0;
  for (const auto& b : prob.blocks) {
    if (b.kind == BlockKind::Constraint) continue;
    ++boxes;
    EXPECT_LT((smat(b.constant) - 50.0 * Eigen::MatrixXd::Identity(b.size, b.size)).norm(), 1e-12) << b.name;
  }
  EXPECT_GT(boxes, 9);
}

TEST(Solve, EmptyConstraintListHitsTheCap) {
  LmiSystem sys;
  sys.layout.add({"x", 1, 1, VariableShape::Symmetric, false});
  const SolveResult r = solve_system(sys, SolverOptions{});
  EXPECT_EQ(r.status, SolveStatus::FeasibleCertified);
  EXPECT_NEAR(r.margin, 1e3, 1e-3);
}

TEST(Solve, ZeroConstraintGivesZeroMargin) {
  const SolveResult r = solve_system(scalar_system({{0.0, 0.0}}));
  EXPECT_NEAR(r.margin, 0.0, 1e-6);
  EXPECT_NE(r.status, SolveStatus::FeasibleCertified);
}

TEST(Solve, SimpleIntervalIsCentered) {
  // x >= t, 1 - x >= t  ->  t* = 0.5
  const SolveResult r = solve_system(scalar_system({{0.0, 1.0}, {1.0, -1.0}}));
  EXPECT_EQ(r.status, SolveStatus::FeasibleCertified);
  EXPECT_NEAR(r.margin, 0.5, 1e-6);
  EXPECT_NEAR(r.values[0](0, 0), 0.5, 1e-6);
}

TEST(Solve, OpposedPairIsNotCertified) {
  // x >= t, -x >= t forces x = t = 0; the dual certificate classifies it infeasible
  const SolveResult r = solve_system(scalar_system({{0.0, 1.0}, {0.0, -1.0}}));
  EXPECT_NEAR(r.margin, 0.0, 1e-6);
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
}

TEST(Solve, NegativeMarginIsInfeasible) {
  // -1 - x >= t, x >= t  ->  t* = -0.5
  const SolveResult r = solve_system(scalar_system({{-1.0, -1.0}, {0.0, 1.0}}));
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
  EXPECT_NEAR(r.margin, -0.5, 1e-6);
}

TEST(Solve, MarginBoundFromExactMultipliers) {
  const LmiSystem sys = scalar_system({{0.0, 1.0}, {0.0, -1.0}});
  const std::vector<Eigen::MatrixXd> X = {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  EXPECT_NEAR(margin_upper_bound(sys, X), 0.0, 1e-15);
  const std::vector<Eigen::MatrixXd> Z = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
  EXPECT_TRUE(std::isinf(margin_upper_bound(sys, Z)));
}

TEST(Solve, ExampleAnalysisAtThreeAndFour) {
  const PlantModel p = example_ssf();
  const FeedbackGain K(hu_gain());
  const SolveResult ok = solve_system(build_analysis_system(p, DelayBounds(1, 3), K));
  EXPECT_EQ(ok.status, SolveStatus::FeasibleCertified);
  const SolveResult bad = solve_system(build_analysis_system(p, DelayBounds(1, 4), K));
  EXPECT_EQ(bad.status, SolveStatus::Infeasible);
}

TEST(Solve, CertificationIsIndependentOfTheSolver) {
  const LmiSystem sys = build_analysis_system(example_ssf(), DelayBounds(1, 3), FeedbackGain(hu_gain()));
  const SvecProblem prob = compile(sys);
  const SolveResult r = solve(prob);
  ASSERT_EQ(r.status, SolveStatus::FeasibleCertified);
  for (double e : constraint_min_eigenvalues(sys, r.values)) EXPECT_GE(e, r.margin - 1e-6);

  // an adapter that claims a large margin at a bogus point is not believed
  Eigen::VectorXd y = Eigen::VectorXd::Zero(prob.num_scalar_vars);
  y(prob.margin_index) = 10.0;
  const SolveResult lie = solve(prob, SolverOptions{}, FixedAdapter(y));
  EXPECT_NE(lie.status, SolveStatus::FeasibleCertified);

  const SolveResult crash = solve(prob, SolverOptions{}, ThrowingAdapter());
  EXPECT_EQ(crash.status, SolveStatus::Inconclusive);
  EXPECT_EQ(crash.stats.adapter_status, "exception");
}

TEST(Solve, Deterministic) {
  const SvecProblem prob = compile(build_analysis_system(example_sof(), DelayBounds(1, 10), FeedbackGain(sof_gain())));
  const SolveResult a = solve(prob), b = solve(prob);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.margin, b.margin);
}

TEST(Adapters, UnknownNameIsAnEnvironmentError) {
  EXPECT_THROW(make_adapter("nope"), EnvironmentError);
  EXPECT_EQ(make_adapter("ipm")->name(), "ipm");
  ::setenv("DELAYSOF_SOLVER", "nope", 1);
  EXPECT_THROW(default_adapter(), EnvironmentError);
  ::unsetenv("DELAYSOF_SOLVER");
  EXPECT_EQ(default_adapter()->name(), "ipm");
}

TEST(Sdpa, DumpLayout) {
  const SvecProblem prob = compile(scalar_system({{0.0, 1.0}, {1.0, -1.0}}));
  std::ostringstream os;
  write_sdpa(prob, os);
  std::istringstream in(os.str());
  int m = 0, nb = 0;
  in >> m >> nb;
  EXPECT_EQ(m, prob.num_scalar_vars);
  EXPECT_EQ(nb, static_cast<int>(prob.blocks.size()));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);  // block sizes
  std::getline(in, line);  // objective
  int entries = 0;
  int con, blk, row, col;
  double val;
  while (in >> con >> blk >> row >> col >> val) {
    ++entries;
    EXPECT_GE(blk, 1);
    EXPECT_LE(row, col);
    EXPECT_GE(row, 1);
  }
  EXPECT_GT(entries, 0);
}
