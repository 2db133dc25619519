#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "delaysof/affine_expr.hpp"
#include "delaysof/lmi_system.hpp"
#include "delaysof/model.hpp"

namespace delaysof {

/// Companion form on [x(k); x(k-1); ...; x(k-d)]; A + B K C for d = 0.
Eigen::MatrixXd lift_constant_delay(const PlantModel& plant, const FeedbackGain& K, int d);

/// Uniform integers on [a, b] from a 64-bit Mersenne Twister (rejection
/// sampling, so sequences do not depend on the standard library).
class DelayRng {
 public:
  explicit DelayRng(std::uint64_t seed) : engine_(seed) {}
  int uniform_int(int a, int b);
  double uniform_real(double a, double b);  // 53-bit resolution

 private:
  std::mt19937_64 engine_;
};

std::vector<int> random_delays(const DelayBounds& bounds, int length, std::uint64_t seed);

/// Deterministic adversaries: variant 0 alternates d_min, d_max every step;
/// variant 1 holds each extreme for d_max + 1 steps.
std::vector<int> bang_bang_delays(const DelayBounds& bounds, int length, int variant);

struct Trajectory {
  int n = 0, m = 0;
  int history = 0;   // x is known from k = -history
  int steps = 0;     // T: x known up to k = T (or up to the divergence step)
  Eigen::MatrixXd x;  // column k + history
  Eigen::MatrixXd u;  // column k + history, k < steps
  std::vector<int> d;  // d[k], k < steps
  bool diverged = false;
  int divergence_step = -1;

  Eigen::VectorXd x_at(int k) const;
  Eigen::VectorXd u_at(int k) const;
};

/// Iterates x(k+1) = A x(k) + B K C x(k - d(k)) for T = d_seq.size() steps.
/// `phi` holds the initial history x(-d_max) .. x(0), oldest first.
/// Stops with diverged = true once ||x(k)|| > 1e12.
Trajectory simulate(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds,
                    const std::vector<int>& d_seq, const std::vector<Eigen::VectorXd>& phi);

/// xi(k) = [x(k+1), x(k), x(k-d_min), x(k-d(k)), x(k-d_max), v1, v2, v3].
Eigen::VectorXd build_xi(const Trajectory& traj, const DelayBounds& bounds, int k);

struct LkfValue {
  double v1 = 0.0, v2 = 0.0, v3 = 0.0, total = 0.0;
};

/// Uses P, W1, W2, Z1, Z2 at their fixed layout positions.
LkfValue lkf_value(const Trajectory& traj, const Assignment& vars, const DelayBounds& bounds, int k);

double supply_rate(const Eigen::VectorXd& y, const Eigen::VectorXd& u, const Eigen::MatrixXd& Q,
                   const Eigen::MatrixXd& S, const Eigen::MatrixXd& R);

struct ChainReport {
  int k = 0;
  double dV = 0.0;
  double xi_phi_xi = 0.0;
  double w = 0.0;
  bool lkf_leg = false;     // dV <= xi' Phi xi
  bool supply_leg = false;  // xi' Phi xi <= w
  bool strict_leg = false;  // w < 0 (waived when y(k-d) = 0)
  bool pass = false;
};

ChainReport check_dissipation_chain(const Trajectory& traj, const PlantModel& plant, const Assignment& vars,
                                    const SupplyRate& supply, const DelayBounds& bounds, int k);

/// Header `k,x1..xn,u1..um,d`, 17 significant digits, rows k = 0 .. steps-1.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

// Oracles used by the reports.

struct SpectralReport {
  std::vector<int> delays;
  std::vector<double> radii;
  double max_radius = 0.0;
  bool pass = false;  // every radius < 1 - 1e-9
};

SpectralReport spectral_oracle(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds);

struct SimulationOptions {
  int seeds = 100;
  int steps = 500;  // 0: automatic horizon from the spectral radius
  double threshold = 1e-6;
  int random_histories = 10;
  bool bang_bang = true;
  std::uint64_t base_seed = 0;
};

/// max(500, ceil(2 ln(threshold) / ln(rho))), rho = worst constant-delay radius.
/// For rho > 1: long enough to reach the divergence guard (1.5 ln(1e12) / ln(rho)).
int automatic_horizon(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds,
                      double threshold);

struct SimulationCase {
  std::string sequence;  // "random" or "bang-bang-0/1"
  std::uint64_t seed = 0;
  int history = 0;        // 0..n-1 canonical, then random
  double ratio = 0.0;     // ||x(T)|| / max ||phi||
  bool diverged = false;
  int divergence_step = -1;
  bool pass = false;
};

// One delay sequence with all its initial histories.
struct SequenceSummary {
  std::string sequence;
  std::uint64_t seed = 0;
  int runs = 0;
  int passed = 0;
  int diverged = 0;
  int first_divergence_step = -1;
  double worst_ratio = 0.0;
};

struct SimulationReport {
  int steps = 0;
  int total = 0;
  int passed = 0;
  int diverged = 0;
  double worst_ratio = 0.0;
  std::vector<SimulationCase> failures;  // capped at 20
  std::vector<SequenceSummary> sequences;
  bool pass = false;
};

SimulationReport simulation_oracle(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds,
                                   const SimulationOptions& options = {});

struct ChainSummary {
  int samples = 0;
  int passed = 0;
  double worst_lkf_gap = 0.0;     // max (dV - xi'Phi xi) / (1 + |dV|)
  double worst_supply_gap = 0.0;  // max (xi'Phi xi - w) / (1 + |dV|)
  double max_w = 0.0;
  bool pass = false;
};

/// `samples` random (seed, k) points along random-delay trajectories.
ChainSummary dissipation_chain_oracle(const PlantModel& plant, const FeedbackGain& K, const Assignment& vars,
                                      const SupplyRate& supply, const DelayBounds& bounds, int samples,
                                      std::uint64_t base_seed = 0);

}  // namespace delaysof
