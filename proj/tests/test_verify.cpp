#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "delaysof/analysis.hpp"
#include "delaysof/errors.hpp"
#include "delaysof/selectors.hpp"
#include "delaysof/verify.hpp"
#include "support.hpp"

using namespace delaysof;
using namespace testing_support;

namespace {

std::vector<Eigen::VectorXd> constant_history(const Eigen::VectorXd& c, int d_max) {
  return std::vector<Eigen::VectorXd>(static_cast<size_t>(d_max + 1), c);
}

std::vector<Eigen::VectorXd> random_history(std::mt19937_64& g, int n, int d_max) {
  std::vector<Eigen::VectorXd> phi;
  for (int i = 0; i <= d_max; ++i) phi.push_back(random_matrix(g, n, 1));
  return phi;
}

// Functional summed term by term over explicit index lists.
double brute_lkf(const Trajectory& tr, const Assignment& v, int dm, int dM, int k) {
  const int n = tr.n;
  std::vector<Eigen::VectorXd> xs;
  for (int l = k - dM - 1; l <= k; ++l) xs.push_back(tr.x_at(std::max(l, -tr.history)));
  auto x = [&](int l) { return xs[static_cast<size_t>(l - (k - dM - 1))]; };
  Eigen::VectorXd w(3 * n);
  w.setZero();
  w.head(n) = x(k);
  double v2 = 0.0, v3 = 0.0;
  for (int j = 1; j <= dm; ++j) {
    w.segment(n, n) += x(k - j);
    v2 += x(k - j).dot(v[kVarW1] * x(k - j));
  }
  for (int j = dm + 1; j <= dM; ++j) {
    w.tail(n) += x(k - j);
    v2 += x(k - j).dot(v[kVarW2] * x(k - j));
  }
  // each eta(i) = x(i) - x(i-1), i in (k - d, k], is counted once per window that contains it
  for (int i = k - dM + 1; i <= k; ++i) {
    const Eigen::VectorXd eta = x(i) - x(i - 1);
    const int age = k - i;  // 0 .. dM-1
    const int count1 = std::max(0, dm - age);
    const int count2 = std::max(0, dM - std::max(dm, age));
    v3 += dm * count1 * eta.dot(v[kVarZ1] * eta) + (dM - dm) * count2 * eta.dot(v[kVarZ2] * eta);
  }
  return w.dot(v[kVarP] * w) + v2 + v3;
}

Assignment random_psd_vars(std::mt19937_64& g, int n) {
  Assignment a(6);
  a[kVarP] = random_spd(g, 3 * n);
  for (int v : {kVarW1, kVarW2, kVarZ1, kVarZ2}) a[static_cast<size_t>(v)] = random_spd(g, n);
  a[kVarX] = random_matrix(g, 2 * n, 2 * n);
  return a;
}

}  // namespace

TEST(Lift, ZeroDelayIsClosedLoop) {
  const PlantModel p = example_ssf();
  const FeedbackGain K(hu_gain());
  EXPECT_EQ(lift_constant_delay(p, K, 0), p.A() + p.B() * K.K() * p.C());
  EXPECT_THROW(lift_constant_delay(p, K, -1), ContractError);
}

TEST(Lift, ScalarCompanion) {
  const PlantModel p(Eigen::MatrixXd::Constant(1, 1, 0.3), Eigen::MatrixXd::Constant(1, 1, 2.0),
                     Eigen::MatrixXd::Identity(1, 1));
  const Eigen::MatrixXd L = lift_constant_delay(p, FeedbackGain(Eigen::MatrixXd::Constant(1, 1, 0.25)), 1);
  EXPECT_EQ(L, (Eigen::MatrixXd(2, 2) << 0.3, 0.5, 1.0, 0.0).finished());
}

TEST(Lift, ReferenceGainAtThreeIsStable) {
  const Eigen::MatrixXd L = lift_constant_delay(example_ssf(), FeedbackGain(hu_gain()), 3);
  EXPECT_EQ(L.rows(), 8);
  EXPECT_LT(spectral_radius(L), 1.0);
}

TEST(Delays, DegenerateIntervalAndDeterminism) {
  for (int d : random_delays(DelayBounds(3, 3), 50, 1)) EXPECT_EQ(d, 3);
  EXPECT_EQ(random_delays(DelayBounds(1, 19), 500, 42), random_delays(DelayBounds(1, 19), 500, 42));
  EXPECT_NE(random_delays(DelayBounds(1, 19), 500, 42), random_delays(DelayBounds(1, 19), 500, 43));
  EXPECT_THROW(random_delays(DelayBounds(1, 2), 0, 1), ContractError);
}

TEST(Delays, UniformFrequencies) {
  // At n = 1e4 one share has sigma ~ 0.0022 ~ 4.2% of 1/19, so the band is 4 sigma.
  const double p = 1.0 / 19.0;
  for (auto [n, band] : {std::pair{10000, 4.0 * std::sqrt(p * (1 - p) / 10000)}, std::pair{200000, 0.05 * p}}) {
    const auto seq = random_delays(DelayBounds(1, 19), n, 2024);
    std::map<int, int> counts;
    for (int d : seq) {
      ASSERT_GE(d, 1);
      ASSERT_LE(d, 19);
      ++counts[d];
    }
    ASSERT_EQ(counts.size(), 19u);
    for (auto [d, c] : counts) EXPECT_NEAR(static_cast<double>(c) / n, p, band) << "n=" << n << " d=" << d;
  }
}

TEST(Delays, RealsAreInRange) {
  DelayRng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform_real(-1.0, 1.0);
    EXPECT_GE(x, -1.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Delays, BangBang) {
  const DelayBounds b(2, 4);
  EXPECT_EQ(bang_bang_delays(b, 6, 0), (std::vector<int>{2, 4, 2, 4, 2, 4}));
  EXPECT_EQ(bang_bang_delays(b, 12, 1), (std::vector<int>{2, 2, 2, 2, 2, 4, 4, 4, 4, 4, 2, 2}));
  EXPECT_THROW(bang_bang_delays(b, 4, 2), ContractError);
}

TEST(Simulate, DecoupledGeometricDecay) {
  const PlantModel p(0.5 * Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Identity(2, 2));
  const DelayBounds b(1, 3);
  const Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 1.0, -2.0).finished();
  const Trajectory tr = simulate(p, FeedbackGain(Eigen::MatrixXd::Ones(1, 2)), b, random_delays(b, 30, 1), constant_history(x0, 3));
  for (int k = 0; k <= 30; ++k) EXPECT_LT((tr.x_at(k) - std::pow(0.5, k) * x0).norm(), 1e-15);
}

TEST(Simulate, RecursionAndInputs) {
  std::mt19937_64 g(31);
  const PlantModel p = example_sof();
  const FeedbackGain K(sof_gain());
  const DelayBounds b(1, 7);
  const Trajectory tr = simulate(p, K, b, random_delays(b, 60, 9), random_history(g, 2, 7));
  for (int k = 0; k < 60; ++k) {
    const int d = tr.d[static_cast<size_t>(k)];
    const Eigen::VectorXd expect = p.A() * tr.x_at(k) + p.B() * K.K() * p.C() * tr.x_at(k - d);
    EXPECT_LT((tr.x_at(k + 1) - expect).norm(), 1e-12 * std::max(1.0, expect.norm()));
    EXPECT_LT((tr.u_at(k) - K.K() * p.C() * tr.x_at(k)).norm(), 1e-15);
  }
}

TEST(Simulate, OpenLoopDiverges) {
  const PlantModel p = example_ssf();
  const DelayBounds b(1, 3);
  const Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 0.0, 1.0).finished();
  const Trajectory tr = simulate(p, FeedbackGain(Eigen::MatrixXd::Zero(1, 2)), b, random_delays(b, 2000, 1),
                                 constant_history(x0, 3));
  EXPECT_TRUE(tr.diverged);
  EXPECT_GT(tr.divergence_step, 0);
  EXPECT_EQ(tr.steps, tr.divergence_step);
}

TEST(Simulate, Contracts) {
  const PlantModel p = example_sof();
  const DelayBounds b(1, 3);
  EXPECT_THROW(simulate(p, FeedbackGain(sof_gain()), b, {1, 2}, constant_history(Eigen::VectorXd::Ones(2), 2)),
               ContractError);
  EXPECT_THROW(simulate(p, FeedbackGain(sof_gain()), b, {1, 4}, constant_history(Eigen::VectorXd::Ones(2), 3)),
               ContractError);
}

TEST(Xi, ConstantTrajectory) {
  const PlantModel p(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Identity(2, 2));
  const DelayBounds b(2, 5);
  const Eigen::VectorXd c = (Eigen::VectorXd(2) << 1.5, -0.5).finished();
  const Trajectory tr = simulate(p, FeedbackGain(Eigen::MatrixXd::Zero(1, 2)), b, random_delays(b, 10, 4), constant_history(c, 5));
  const Eigen::VectorXd xi = build_xi(tr, b, 3);
  for (int blk = 0; blk < 8; ++blk) EXPECT_LT((xi.segment(2 * blk, 2) - c).norm(), 1e-15);
  EXPECT_THROW(build_xi(tr, b, 10), ContractError);
  EXPECT_THROW(build_xi(tr, b, -1), ContractError);
}

TEST(Xi, AveragesMatchSums) {
  std::mt19937_64 g(32);
  const PlantModel p = example_ssf();
  const DelayBounds b(2, 6);
  std::vector<int> seq = random_delays(b, 20, 5);
  seq[4] = b.d_min();
  const Trajectory tr = simulate(p, FeedbackGain(hu_gain()), b, seq, random_history(g, 2, 6));
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd xi = build_xi(tr, b, k);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
    for (int l = k - b.d_min(); l <= k; ++l) s += tr.x_at(l);
    EXPECT_LT((xi.segment(2 * kAvg1, 2) * (b.d_min() + 1) - s).norm(), 1e-12 * (1 + s.norm()));
  }
  EXPECT_LT((build_xi(tr, b, 4).segment(2 * kAvg2, 2) - tr.x_at(4 - b.d_min())).norm(), 1e-15);
}

TEST(Lkf, ZeroAndConstantHistories) {
  std::mt19937_64 g(33);
  const PlantModel p(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Identity(2, 2));
  const DelayBounds b(2, 5);
  const Assignment v = random_psd_vars(g, 2);
  const FeedbackGain K(Eigen::MatrixXd::Zero(1, 2));
  const Trajectory zero = simulate(p, K, b, {3, 3}, constant_history(Eigen::VectorXd::Zero(2), 5));
  EXPECT_EQ(lkf_value(zero, v, b, 0).total, 0.0);
  const Eigen::VectorXd c = (Eigen::VectorXd(2) << 0.7, -1.1).finished();
  const Trajectory flat = simulate(p, K, b, {3, 3}, constant_history(c, 5));
  const LkfValue val = lkf_value(flat, v, b, 0);
  EXPECT_EQ(val.v3, 0.0);
  EXPECT_NEAR(val.v2, 2 * c.dot(v[kVarW1] * c) + 3 * c.dot(v[kVarW2] * c), 1e-13);
  EXPECT_NEAR(val.total, val.v1 + val.v2 + val.v3, 1e-13);
}

TEST(Lkf, MatchesBruteForceSummation) {
  std::mt19937_64 g(34);
  const PlantModel p = example_ssf();
  const DelayBounds b(2, 7);
  const Trajectory tr = simulate(p, FeedbackGain(hu_gain()), b, random_delays(b, 25, 6), random_history(g, 2, 7));
  for (int trial = 0; trial < 5; ++trial) {
    const Assignment v = random_psd_vars(g, 2);
    for (int k : {0, 3, 11, 25}) {
      const double expect = brute_lkf(tr, v, b.d_min(), b.d_max(), k);
      const LkfValue got = lkf_value(tr, v, b, k);
      EXPECT_NEAR(got.total, expect, 1e-11 * std::max(1.0, expect));
      EXPECT_GT(got.total, 0.0);
    }
  }
}

TEST(Supply, Values) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(1, 1);
  EXPECT_EQ(supply_rate(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), I, I, I), 0.0);
  EXPECT_EQ(supply_rate(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), -I, 0 * I, -I), -2.0);
  std::mt19937_64 g(35);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd Q = random_symmetric(g, 3), S = random_matrix(g, 3, 2), R = random_symmetric(g, 2);
    const Eigen::VectorXd y = random_matrix(g, 3, 1), u = random_matrix(g, 2, 1);
    Eigen::MatrixXd M(5, 5);
    M << Q, S, S.transpose(), R;
    Eigen::VectorXd lam(5);
    lam << y, u;
    const double ref = lam.dot(M * lam);
    EXPECT_NEAR(supply_rate(y, u, Q, S, R), ref, 1e-13 * std::max(1.0, std::abs(ref)));
  }
  EXPECT_THROW(supply_rate(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1), I, I, I), ContractError);
}

TEST(Chain, ZeroTrajectoryPassesVacuously) {
  const PlantModel p = example_sof();
  const DelayBounds b(1, 4);
  const CertifyResult r = certify(p, b, FeedbackGain(sof_gain()));
  ASSERT_TRUE(r.certificate);
  const Trajectory tr = simulate(p, FeedbackGain(sof_gain()), b, random_delays(b, 10, 1),
                                 constant_history(Eigen::VectorXd::Zero(2), 4));
  const ChainReport c = check_dissipation_chain(tr, p, r.certificate->variables, r.certificate->supply(), b, 3);
  EXPECT_EQ(c.dV, 0.0);
  EXPECT_EQ(c.xi_phi_xi, 0.0);
  EXPECT_EQ(c.w, 0.0);
  EXPECT_TRUE(c.pass);
}

TEST(Chain, CertifiedOutputFeedbackGainHolds) {
  const PlantModel p = example_sof();
  const DelayBounds b(1, 19);
  const CertifyResult r = certify(p, b, FeedbackGain(sof_gain()));
  ASSERT_TRUE(r.certificate);
  const ChainSummary s = dissipation_chain_oracle(p, FeedbackGain(sof_gain()), r.certificate->variables,
                                                  r.certificate->supply(), b, 100, 0);
  EXPECT_EQ(s.samples, 100);
  EXPECT_TRUE(s.pass) << s.passed;
  EXPECT_LT(s.max_w, 0.0);
}

TEST(Chain, PerturbedSupplyIsCaught) {
  const PlantModel p = example_sof();
  const DelayBounds b(1, 19);
  const CertifyResult r = certify(p, b, FeedbackGain(sof_gain()));
  ASSERT_TRUE(r.certificate);
  Assignment vars = r.certificate->variables;
  SupplyRate w = r.certificate->supply();
  // lowering the supply breaks xi'Phi xi <= w
  w.Q -= 10.0 * (1.0 + w.Q.norm()) * Eigen::MatrixXd::Identity(w.Q.rows(), w.Q.cols());
  vars[kVarQ] = w.Q;
  const ChainSummary s = dissipation_chain_oracle(p, FeedbackGain(sof_gain()), vars, w, b, 100, 0);
  EXPECT_FALSE(s.pass);
  EXPECT_GT(s.worst_supply_gap, 0.0);
}

TEST(Csv, Layout) {
  const PlantModel p = example_ssf();
  const DelayBounds b(1, 2);
  const Trajectory tr = simulate(p, FeedbackGain(hu_gain()), b, {1, 2, 1}, constant_history(Eigen::VectorXd::Ones(2) / 3.0, 2));
  std::ostringstream os;
  write_trajectory_csv(tr, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,x1,x2,u1,d");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0,0.33333333333333331,0.33333333333333331,", 0), 0u) << line;
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Oracles, SpectralAndHorizon) {
  const PlantModel p = example_ssf();
  const SpectralReport ok = spectral_oracle(p, FeedbackGain(hu_gain()), DelayBounds(1, 3));
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.delays, (std::vector<int>{1, 2, 3}));
  const SpectralReport bad = spectral_oracle(p, FeedbackGain(Eigen::MatrixXd::Zero(1, 2)), DelayBounds(1, 3));
  EXPECT_FALSE(bad.pass);
  EXPECT_GE(automatic_horizon(p, FeedbackGain(hu_gain()), DelayBounds(1, 3), 1e-6), 500);
  // unstable loops get a horizon long enough to reach the divergence guard
  SimulationOptions o;
  o.seeds = 2;
  o.steps = 0;
  const SimulationReport r = simulation_oracle(p, FeedbackGain(Eigen::MatrixXd::Zero(1, 2)), DelayBounds(1, 3), o);
  EXPECT_EQ(r.diverged, r.total);
  EXPECT_FALSE(r.pass);
}

TEST(Oracles, SimulationBookkeeping) {
  SimulationOptions o;
  o.seeds = 3;
  o.random_histories = 2;
  const SimulationReport r = simulation_oracle(example_ssf(), FeedbackGain(hu_gain()), DelayBounds(1, 3), o);
  EXPECT_EQ(r.total, (3 + 2) * (2 + 2));  // (seeds + bang-bang) x (n canonical + random)
  EXPECT_EQ(r.sequences.size(), 5u);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.steps, 500);
}
