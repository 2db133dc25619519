#pragma once

#include <Eigen/Dense>

namespace delaysof {

/// s(s+1)/2
int svec_length(int s);

/// Side of the symmetric matrix for a given svec length; throws ContractError
/// when `len` is not a triangular number.
int svec_side(int len);

/// Upper triangle, row-major, off-diagonals scaled by sqrt(2), so that
/// svec(A) . svec(B) = trace(A B).
Eigen::VectorXd svec(const Eigen::MatrixXd& M);

/// Inverse of svec.
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace delaysof
