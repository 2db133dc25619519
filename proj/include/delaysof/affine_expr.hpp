#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "json.hpp"

namespace delaysof {

enum class VariableShape {
  Symmetric,  // rows == cols, parametrized by svec
  General,    // rows x cols, row-major
  Scalar,     // one coordinate; acts as r * I_k inside a term
};

struct VariableDescriptor {
  std::string name;
  int rows = 0;
  int cols = 0;
  VariableShape shape = VariableShape::Symmetric;
  bool positive = false;  // imposed as V >= t I by the system builders

  int num_coordinates() const;
};

/// Ordered set of named decision variables; each name appears once.
class DecisionLayout {
 public:
  int add(VariableDescriptor v);

  int size() const { return static_cast<int>(vars_.size()); }
  const VariableDescriptor& operator[](int i) const { return vars_.at(static_cast<size_t>(i)); }
  const std::vector<VariableDescriptor>& variables() const { return vars_; }

  /// Index of `name`, or -1.
  int find(const std::string& name) const;
  int index_of(const std::string& name) const;  // throws when absent

  int num_coordinates() const;

 private:
  std::vector<VariableDescriptor> vars_;
};

/// Values for every variable of a layout, in layout order (scalars as 1x1).
using Assignment = std::vector<Eigen::MatrixXd>;

Assignment zero_assignment(const DecisionLayout& layout);

/// Scalar coordinates <-> matrix values (symmetric blocks use smat).
Eigen::MatrixXd unpack_variable(const VariableDescriptor& v, const Eigen::Ref<const Eigen::VectorXd>& coords);
Eigen::VectorXd pack_variable(const VariableDescriptor& v, const Eigen::MatrixXd& value);

/// One contribution L V R^T (plus its transpose when `symmetrize`). For a
/// scalar variable, V is read as r * I_k with k = left.cols().
struct AffineTerm {
  int var = -1;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  bool symmetrize = false;
};

/// Symmetric s x s matrix expression affine in the variables of a layout.
class AffineMatrixExpr {
 public:
  AffineMatrixExpr() = default;
  explicit AffineMatrixExpr(int size);
  static AffineMatrixExpr constant(const Eigen::MatrixXd& C);

  int size() const { return size_; }
  const Eigen::MatrixXd& constant_part() const { return constant_; }
  const std::vector<AffineTerm>& terms() const { return terms_; }

  AffineMatrixExpr& add_term(int var, Eigen::MatrixXd left, Eigen::MatrixXd right, bool symmetrize = false);
  AffineMatrixExpr& add_constant(const Eigen::MatrixXd& C);
  AffineMatrixExpr& operator+=(const AffineMatrixExpr& other);
  AffineMatrixExpr& operator*=(double alpha);

  /// T^T E T, for T of shape size() x k.
  AffineMatrixExpr congruence(const Eigen::MatrixXd& T) const;

  Eigen::MatrixXd evaluate(const Assignment& values) const;

  /// Contribution of one variable set to `value`, other variables at zero, no constant.
  Eigen::MatrixXd evaluate_linear(int var, const Eigen::MatrixXd& value) const;

  /// Gradient of <E(V), X> with respect to each variable (the adjoint map);
  /// returned in layout order, shaped like the variables.
  Assignment adjoint(const DecisionLayout& layout, const Eigen::MatrixXd& X) const;

  bool references_only(const DecisionLayout& layout) const;

  nlohmann::ordered_json to_json(const DecisionLayout& layout) const;

 private:
  int size_ = 0;
  Eigen::MatrixXd constant_;
  std::vector<AffineTerm> terms_;
};

AffineMatrixExpr operator+(AffineMatrixExpr a, const AffineMatrixExpr& b);
AffineMatrixExpr operator-(const AffineMatrixExpr& a);

/// Row-major nested array.
nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j);

}  // namespace delaysof
