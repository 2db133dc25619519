#include "delaysof/svec.hpp"

#include <cmath>

#include "delaysof/errors.hpp"

namespace delaysof {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

int svec_length(int s) { return s * (s + 1) / 2; }

int svec_side(int len) {
  if (len < 1) throw ContractError("smat: empty vector");
  const int s = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (svec_length(s) != len) throw ContractError("smat: length is not a triangular number");
  return s;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw ContractError("svec: matrix must be square");
  const double scale = M.cwiseAbs().maxCoeff();
  if (M.size() > 0 && (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ContractError("svec: matrix is not symmetric");
  }
  const int s = static_cast<int>(M.rows());
  Eigen::VectorXd v(svec_length(s));
  int k = 0;
  for (int i = 0; i < s; ++i) {
    v(k++) = M(i, i);
    for (int j = i + 1; j < s; ++j) v(k++) = kSqrt2 * 0.5 * (M(i, j) + M(j, i));
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const int s = svec_side(static_cast<int>(v.size()));
  Eigen::MatrixXd M(s, s);
  int k = 0;
  for (int i = 0; i < s; ++i) {
    M(i, i) = v(k++);
    for (int j = i + 1; j < s; ++j) {
      M(i, j) = M(j, i) = v(k++) / kSqrt2;
    }
  }
  return M;
}

}  // namespace delaysof
