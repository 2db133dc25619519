#pragma once

#include <Eigen/Dense>

#include <random>

#include "delaysof/model.hpp"

namespace testing_support {

// Continuous plant of the network control example, Ts = 0.5.
inline Eigen::MatrixXd example_Ac() { return (Eigen::MatrixXd(2, 2) << -0.8, -0.01, 1.0, 0.1).finished(); }
inline Eigen::MatrixXd example_Bc() { return (Eigen::MatrixXd(2, 1) << 0.4, 0.1).finished(); }
inline constexpr double kExampleTs = 0.5;

// Entries as printed for the discretized example (4 significant figures).
inline Eigen::MatrixXd printed_A() { return (Eigen::MatrixXd(2, 2) << 0.6693, -0.0042, 0.04231, 1.0501).finished(); }
inline Eigen::MatrixXd printed_B() { return (Eigen::MatrixXd(2, 1) << 0.1647, 0.0960).finished(); }

inline delaysof::PlantModel example_plant(const Eigen::MatrixXd& C) {
  auto [A, B] = delaysof::discretize_zoh(example_Ac(), example_Bc(), kExampleTs);
  return delaysof::PlantModel(A, B, C);
}
inline delaysof::PlantModel example_ssf() { return example_plant(Eigen::MatrixXd::Identity(2, 2)); }
inline delaysof::PlantModel example_sof() { return example_plant((Eigen::MatrixXd(1, 2) << 0, 1).finished()); }

inline Eigen::MatrixXd hu_gain() { return (Eigen::MatrixXd(1, 2) << -1.2625, -1.2679).finished(); }
inline Eigen::MatrixXd sof_gain() { return Eigen::MatrixXd::Constant(1, 1, -0.1498); }
inline Eigen::MatrixXd ssf_gain() { return (Eigen::MatrixXd(1, 2) << -0.2260, -0.1656).finished(); }

inline Eigen::MatrixXd random_matrix(std::mt19937_64& g, int r, int c) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = N(g);
  return M;
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& g, int s) {
  const Eigen::MatrixXd M = random_matrix(g, s, s);
  return 0.5 * (M + M.transpose());
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& g, int s) {
  const Eigen::MatrixXd M = random_matrix(g, s, s);
  return M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(s, s);
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace testing_support
