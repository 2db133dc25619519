#pragma once

#include <Eigen/Dense>

#include <utility>

namespace delaysof {

/// Discrete-time plant x(k+1) = A x(k) + B u(k - d(k)), y(k) = C x(k).
class PlantModel {
 public:
  PlantModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);

  /// State-feedback plant (C = I).
  static PlantModel with_full_state(Eigen::MatrixXd A, Eigen::MatrixXd B);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& C() const { return C_; }

  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(B_.cols()); }
  int p() const { return static_cast<int>(C_.rows()); }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd C_;
};

/// Admissible delay interval 1 <= d_min <= d(k) <= d_max, in samples.
class DelayBounds {
 public:
  DelayBounds(int d_min, int d_max);

  int d_min() const { return d_min_; }
  int d_max() const { return d_max_; }
  int d_delta() const { return d_max_ - d_min_; }
  bool contains(int d) const { return d >= d_min_ && d <= d_max_; }

  bool operator==(const DelayBounds&) const = default;

 private:
  int d_min_;
  int d_max_;
};

/// Static gain u = K y, K is m x p.
class FeedbackGain {
 public:
  explicit FeedbackGain(Eigen::MatrixXd K);

  const Eigen::MatrixXd& K() const { return K_; }
  int m() const { return static_cast<int>(K_.rows()); }
  int p() const { return static_cast<int>(K_.cols()); }

  /// Throws ContractError when the shape does not match the plant.
  void check_compatible(const PlantModel& plant) const;

 private:
  Eigen::MatrixXd K_;
};

/// Weight of the second Wirtinger term: 1 for d = 1, (d+1)/(d-1) otherwise.
double gamma(int d);

/// Zero-order-hold discretization; returns (A, B).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize_zoh(const Eigen::MatrixXd& Ac,
                                                           const Eigen::MatrixXd& Bc, double Ts);

/// max |lambda_i(M)|.
double spectral_radius(const Eigen::MatrixXd& M);

bool all_finite(const Eigen::MatrixXd& M);

}  // namespace delaysof
