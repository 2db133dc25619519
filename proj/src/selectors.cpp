#include "delaysof/selectors.hpp"

#include <initializer_list>
#include <vector>

#include "delaysof/errors.hpp"

namespace delaysof {

namespace {

// One nonzero identity block: (row block, column block, coefficient).
struct BlockEntry {
  int row;
  int col;
  double coeff;
};

Eigen::MatrixXd assemble(int n, int row_blocks, int col_blocks, std::initializer_list<BlockEntry> entries) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(row_blocks * n, col_blocks * n);
  for (const auto& e : entries) {
    out.block(e.row * n, e.col * n, n, n) += e.coeff * Eigen::MatrixXd::Identity(n, n);
  }
  return out;
}

}  // namespace

std::array<int, 9> SelectorBank::block_sizes() const { return {n, n, n, n, n, n, n, n, m}; }

Eigen::MatrixXd SelectorBank::F_of_d(int d) const {
  const double dd = static_cast<double>(d);
  return assemble(n, 3, kXiBlocks, {{2, kAvg2, dd}, {2, kAvg3, -dd}});
}

Eigen::MatrixXd SelectorBank::zeta_embedding(int block) const {
  if (block < 0 || block > kInput) throw ContractError("zeta_embedding: bad block index");
  const int width = block == kInput ? m : n;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(zeta_size(), width);
  E.block(block * n, 0, width, width).setIdentity();
  return E;
}

// The whole transcription of the stability condition's block matrices lives in this table.
SelectorBank build_selectors(int n, int m, const DelayBounds& bounds) {
  if (n < 1 || m < 1) throw ContractError("build_selectors: n and m must be >= 1");
  const double dm = bounds.d_min();
  const double dM = bounds.d_max();

  SelectorBank s;
  s.n = n;
  s.m = m;
  s.bounds = bounds;

  s.F1 = assemble(n, 3, kXiBlocks,
                  {
                      {0, kNow, 1.0},
                      {1, kNow, -1.0}, {1, kAvg1, dm + 1.0},
                      {2, kLagMin, -1.0}, {2, kLagCur, -1.0}, {2, kAvg2, 1.0 - dm}, {2, kAvg3, dM + 1.0},
                  });
  s.F2 = assemble(n, 3, kXiBlocks,
                  {
                      {0, kNext, 1.0},
                      {1, kLagMin, -1.0}, {1, kAvg1, dm + 1.0},
                      {2, kLagCur, -1.0}, {2, kLagMax, -1.0}, {2, kAvg2, 1.0 - dm}, {2, kAvg3, dM + 1.0},
                  });
  s.F3 = assemble(n, 1, kXiBlocks, {{0, kNext, 1.0}, {0, kNow, -1.0}});

  // M acts on six consecutive state blocks.
  s.M = assemble(n, 2, 6, {{0, 1, 1.0}, {0, 2, -1.0}, {1, 1, 1.0}, {1, 2, 1.0}, {1, 5, -2.0}});

  s.Fs = Eigen::MatrixXd::Zero(2 * n, kXiBlocks * n);
  s.Fs.leftCols(6 * n) = s.M;  // [M, 0_{2n x 2n}]

  s.FPsi = Eigen::MatrixXd::Zero(4 * n, kXiBlocks * n);
  s.FPsi.block(0, 2 * n, 2 * n, 6 * n) = s.M;  // [0_{2n x 2n}, M]
  s.FPsi.block(2 * n, n, 2 * n, 6 * n) = s.M;  // [0_{2n x n}, M, 0_{2n x n}]
  return s;
}

Eigen::MatrixXd gamma_matrix(const PlantModel& plant) {
  const int n = plant.n();
  const int m = plant.m();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, kXiBlocks * n + m);
  G.block(0, 0, n, n) = -Eigen::MatrixXd::Identity(n, n);
  G.block(0, n, n, n) = plant.A();
  G.block(0, kXiBlocks * n, n, m) = plant.B();
  return G;
}

Eigen::MatrixXd gamma_perp(const PlantModel& plant) {
  const int n = plant.n();
  const int m = plant.m();
  const int cols = 7 * n + m;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(kXiBlocks * n + m, cols);
  G.block(0, 0, n, n) = plant.A();
  G.block(0, cols - m, n, m) = plant.B();
  G.bottomRows(cols).setIdentity();
  return G;
}

}  // namespace delaysof
