#include "delaysof/model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "delaysof/errors.hpp"

namespace delaysof {

bool all_finite(const Eigen::MatrixXd& M) { return M.array().isFinite().all(); }

PlantModel::PlantModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw ContractError("PlantModel: A must be square and non-empty");
  }
  if (B_.rows() != A_.rows() || B_.cols() < 1) {
    throw ContractError("PlantModel: B must have n rows and at least one column");
  }
  if (C_.cols() != A_.rows() || C_.rows() < 1) {
    throw ContractError("PlantModel: C must have n columns and at least one row");
  }
  if (!all_finite(A_) || !all_finite(B_) || !all_finite(C_)) {
    throw ContractError("PlantModel: non-finite entry");
  }
}

PlantModel PlantModel::with_full_state(Eigen::MatrixXd A, Eigen::MatrixXd B) {
  const auto n = A.rows();
  return PlantModel(std::move(A), std::move(B), Eigen::MatrixXd::Identity(n, n));
}

DelayBounds::DelayBounds(int d_min, int d_max) : d_min_(d_min), d_max_(d_max) {
  if (d_min < 1 || d_max < d_min) {
    throw ContractError("DelayBounds: need 1 <= d_min <= d_max, got (" + std::to_string(d_min) +
                        ", " + std::to_string(d_max) + ")");
  }
}

FeedbackGain::FeedbackGain(Eigen::MatrixXd K) : K_(std::move(K)) {
  if (K_.rows() < 1 || K_.cols() < 1) throw ContractError("FeedbackGain: empty gain");
  if (!all_finite(K_)) throw ContractError("FeedbackGain: non-finite entry");
}

void FeedbackGain::check_compatible(const PlantModel& plant) const {
  if (m() != plant.m() || p() != plant.p()) {
    throw ContractError("FeedbackGain: expected " + std::to_string(plant.m()) + "x" +
                        std::to_string(plant.p()) + " gain, got " + std::to_string(m()) + "x" +
                        std::to_string(p()));
  }
}

double gamma(int d) {
  if (d <= 0) throw std::domain_error("gamma: d must be >= 1");
  if (d == 1) return 1.0;
  return static_cast<double>(d + 1) / static_cast<double>(d - 1);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize_zoh(const Eigen::MatrixXd& Ac,
                                                           const Eigen::MatrixXd& Bc, double Ts) {
  if (!(Ts > 0.0) || !std::isfinite(Ts)) throw ContractError("discretize_zoh: Ts must be > 0");
  if (Ac.rows() != Ac.cols() || Bc.rows() != Ac.rows()) {
    throw ContractError("discretize_zoh: shape mismatch");
  }
  if (!all_finite(Ac) || !all_finite(Bc)) throw NumericalError("discretize_zoh: non-finite input");

  const auto n = Ac.rows();
  const auto m = Bc.cols();
  // exp([[Ac, Bc], [0, 0]] Ts) = [[A, B], [0, I]]
  Eigen::MatrixXd embed = Eigen::MatrixXd::Zero(n + m, n + m);
  embed.topLeftCorner(n, n) = Ac * Ts;
  embed.topRightCorner(n, m) = Bc * Ts;
  const Eigen::MatrixXd E = embed.exp();
  if (!all_finite(E)) throw NumericalError("discretize_zoh: matrix exponential overflowed");
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw ContractError("spectral_radius: matrix must be square");
  if (!all_finite(M)) throw NumericalError("spectral_radius: non-finite input");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace delaysof
