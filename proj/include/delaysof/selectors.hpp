#pragma once

#include <Eigen/Dense>

#include <array>

#include "delaysof/model.hpp"

namespace delaysof {

/// Column blocks of the extended vector
///   zeta = [x(k+1), x(k), x(k-d_min), x(k-d(k)), x(k-d_max), v1, v2, v3, u(k-d(k))].
/// xi is the first eight (state-sized) blocks.
enum ZetaBlock : int {
  kNext = 0,
  kNow = 1,
  kLagMin = 2,
  kLagCur = 3,
  kLagMax = 4,
  kAvg1 = 5,
  kAvg2 = 6,
  kAvg3 = 7,
  kInput = 8,
};

inline constexpr int kXiBlocks = 8;

/// Constant selector matrices of the delay-dependent LMIs for given
/// (n, m, d_min, d_max). Entries are multiples of identity blocks.
struct SelectorBank {
  int n = 0;
  int m = 0;
  DelayBounds bounds{1, 1};

  Eigen::MatrixXd F1;    // 3n x 8n, w(k) in terms of xi (minus the d(k) part)
  Eigen::MatrixXd F2;    // 3n x 8n, w(k+1) likewise
  Eigen::MatrixXd F3;    // n x 8n,  x(k+1) - x(k)
  Eigen::MatrixXd M;     // 2n x 6n, Wirtinger pair on a window
  Eigen::MatrixXd Fs;    // 2n x 8n
  Eigen::MatrixXd FPsi;  // 4n x 8n

  /// Sizes of the nine zeta blocks: [n x 8, m].
  std::array<int, 9> block_sizes() const;
  int xi_size() const { return kXiBlocks * n; }
  int zeta_size() const { return kXiBlocks * n + m; }

  /// 3n x 8n, carries d I and -d I in the v2/v3 columns of the third row block.
  Eigen::MatrixXd F_of_d(int d) const;

  /// zeta_size x n (or m for kInput) placing one block inside zeta.
  Eigen::MatrixXd zeta_embedding(int block) const;
};

SelectorBank build_selectors(int n, int m, const DelayBounds& bounds);

/// Gamma = [-I, A, 0_{n x 6n}, B]; zeta is a closed-loop sample iff Gamma zeta = 0.
Eigen::MatrixXd gamma_matrix(const PlantModel& plant);

/// Basis of ker Gamma: [[A, 0_{n x 6n}, B], [I_{7n+m}]].
Eigen::MatrixXd gamma_perp(const PlantModel& plant);

}  // namespace delaysof
