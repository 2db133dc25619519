#include "delaysof/affine_expr.hpp"

#include "delaysof/errors.hpp"
#include "delaysof/svec.hpp"

namespace delaysof {

int VariableDescriptor::num_coordinates() const {
  switch (shape) {
    case VariableShape::Symmetric:
      return svec_length(rows);
    case VariableShape::General:
      return rows * cols;
    case VariableShape::Scalar:
      return 1;
  }
  return 0;
}

int DecisionLayout::add(VariableDescriptor v) {
  if (find(v.name) >= 0) throw ContractError("DecisionLayout: duplicate variable " + v.name);
  if (v.rows < 1 || v.cols < 1) throw ContractError("DecisionLayout: empty variable " + v.name);
  if (v.shape == VariableShape::Symmetric && v.rows != v.cols) {
    throw ContractError("DecisionLayout: symmetric variable must be square: " + v.name);
  }
  if (v.shape == VariableShape::Scalar && (v.rows != 1 || v.cols != 1)) {
    throw ContractError("DecisionLayout: scalar variable must be 1x1: " + v.name);
  }
  if (v.positive && v.shape == VariableShape::General) {
    throw ContractError("DecisionLayout: only symmetric or scalar variables can be positive");
  }
  vars_.push_back(std::move(v));
  return size() - 1;
}

int DecisionLayout::find(const std::string& name) const {
  for (size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int DecisionLayout::index_of(const std::string& name) const {
  const int i = find(name);
  if (i < 0) throw ContractError("DecisionLayout: no variable named " + name);
  return i;
}

int DecisionLayout::num_coordinates() const {
  int total = 0;
  for (const auto& v : vars_) total += v.num_coordinates();
  return total;
}

Assignment zero_assignment(const DecisionLayout& layout) {
  Assignment a;
  a.reserve(static_cast<size_t>(layout.size()));
  for (const auto& v : layout.variables()) a.push_back(Eigen::MatrixXd::Zero(v.rows, v.cols));
  return a;
}

Eigen::MatrixXd unpack_variable(const VariableDescriptor& v, const Eigen::Ref<const Eigen::VectorXd>& coords) {
  if (coords.size() != v.num_coordinates()) throw ContractError("unpack_variable: bad length for " + v.name);
  switch (v.shape) {
    case VariableShape::Symmetric:
      return smat(coords);
    case VariableShape::General: {
      Eigen::MatrixXd M(v.rows, v.cols);
      for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) M(i, j) = coords(i * v.cols + j);
      return M;
    }
    case VariableShape::Scalar:
      return Eigen::MatrixXd::Constant(1, 1, coords(0));
  }
  return {};
}

Eigen::VectorXd pack_variable(const VariableDescriptor& v, const Eigen::MatrixXd& value) {
  if (value.rows() != v.rows || value.cols() != v.cols) {
    throw ContractError("pack_variable: bad shape for " + v.name);
  }
  switch (v.shape) {
    case VariableShape::Symmetric:
      return svec(0.5 * (value + value.transpose()));
    case VariableShape::General: {
      Eigen::VectorXd c(v.rows * v.cols);
      for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) c(i * v.cols + j) = value(i, j);
      return c;
    }
    case VariableShape::Scalar:
      return Eigen::VectorXd::Constant(1, value(0, 0));
  }
  return {};
}

AffineMatrixExpr::AffineMatrixExpr(int size) : size_(size), constant_(Eigen::MatrixXd::Zero(size, size)) {
  if (size < 0) throw ContractError("AffineMatrixExpr: negative size");
}

AffineMatrixExpr AffineMatrixExpr::constant(const Eigen::MatrixXd& C) {
  AffineMatrixExpr e(static_cast<int>(C.rows()));
  e.add_constant(C);
  return e;
}

AffineMatrixExpr& AffineMatrixExpr::add_term(int var, Eigen::MatrixXd left, Eigen::MatrixXd right,
                                             bool symmetrize) {
  if (left.rows() != size_ || right.rows() != size_) {
    throw ContractError("AffineMatrixExpr: coefficient rows must equal expression size");
  }
  if (var < 0) throw ContractError("AffineMatrixExpr: negative variable index");
  terms_.push_back({var, std::move(left), std::move(right), symmetrize});
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::add_constant(const Eigen::MatrixXd& C) {
  if (C.rows() != size_ || C.cols() != size_) throw ContractError("AffineMatrixExpr: constant shape");
  constant_ += C;
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::operator+=(const AffineMatrixExpr& other) {
  if (other.size_ != size_) throw ContractError("AffineMatrixExpr: size mismatch in +");
  constant_ += other.constant_;
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::operator*=(double alpha) {
  constant_ *= alpha;
  for (auto& t : terms_) t.left *= alpha;
  return *this;
}

AffineMatrixExpr AffineMatrixExpr::congruence(const Eigen::MatrixXd& T) const {
  if (T.rows() != size_) throw ContractError("AffineMatrixExpr: congruence shape");
  AffineMatrixExpr out(static_cast<int>(T.cols()));
  out.constant_ = T.transpose() * constant_ * T;
  out.terms_.reserve(terms_.size());
  for (const auto& t : terms_) {
    out.terms_.push_back({t.var, T.transpose() * t.left, T.transpose() * t.right, t.symmetrize});
  }
  return out;
}

namespace {

Eigen::MatrixXd term_value(const AffineTerm& t, const Eigen::MatrixXd& value) {
  Eigen::MatrixXd v;
  if (value.rows() == 1 && value.cols() == 1 && t.left.cols() != 1) {
    v = t.left * value(0, 0) * t.right.transpose();  // scalar variable: r * L R^T
  } else {
    v = t.left * value * t.right.transpose();
  }
  if (t.symmetrize) v += v.transpose().eval();
  return v;
}

}  // namespace

Eigen::MatrixXd AffineMatrixExpr::evaluate(const Assignment& values) const {
  Eigen::MatrixXd out = constant_;
  for (const auto& t : terms_) {
    if (t.var >= static_cast<int>(values.size())) throw ContractError("AffineMatrixExpr: missing variable value");
    out += term_value(t, values[static_cast<size_t>(t.var)]);
  }
  return out;
}

Eigen::MatrixXd AffineMatrixExpr::evaluate_linear(int var, const Eigen::MatrixXd& value) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size_, size_);
  for (const auto& t : terms_) {
    if (t.var == var) out += term_value(t, value);
  }
  return out;
}

Assignment AffineMatrixExpr::adjoint(const DecisionLayout& layout, const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd Xs = 0.5 * (X + X.transpose());
  Assignment grad = zero_assignment(layout);
  for (const auto& t : terms_) {
    const auto& v = layout[t.var];
    const double mult = t.symmetrize ? 2.0 : 1.0;
    const Eigen::MatrixXd G = mult * t.left.transpose() * Xs * t.right;
    auto& g = grad[static_cast<size_t>(t.var)];
    if (v.shape == VariableShape::Scalar) {
      g(0, 0) += (G.rows() == 1 && G.cols() == 1) ? G(0, 0) : G.trace();
    } else {
      g += G;
    }
  }
  for (int i = 0; i < layout.size(); ++i) {
    if (layout[i].shape == VariableShape::Symmetric) {
      auto& g = grad[static_cast<size_t>(i)];
      g = 0.5 * (g + g.transpose()).eval();
    }
  }
  return grad;
}

bool AffineMatrixExpr::references_only(const DecisionLayout& layout) const {
  for (const auto& t : terms_) {
    if (t.var >= layout.size()) return false;
    const auto& v = layout[t.var];
    if (v.shape == VariableShape::Scalar) {
      if (t.left.cols() != t.right.cols()) return false;
    } else if (t.left.cols() != v.rows || t.right.cols() != v.cols) {
      return false;
    }
  }
  return true;
}

nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& M) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_array() || j.empty()) throw ContractError("matrix must be a non-empty array of rows");
  // A flat array of numbers is read as a single row.
  if (!j.front().is_array()) {
    Eigen::MatrixXd M(1, static_cast<Eigen::Index>(j.size()));
    for (size_t c = 0; c < j.size(); ++c) M(0, static_cast<Eigen::Index>(c)) = j[c].get<double>();
    return M;
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ContractError("matrix rows must all have the same length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return M;
}

nlohmann::ordered_json AffineMatrixExpr::to_json(const DecisionLayout& layout) const {
  nlohmann::ordered_json j;
  j["size"] = size_;
  j["constant"] = matrix_to_json(constant_);
  auto terms = nlohmann::ordered_json::array();
  for (const auto& t : terms_) {
    nlohmann::ordered_json tj;
    tj["variable"] = t.var < layout.size() ? layout[t.var].name : std::string("?");
    tj["left"] = matrix_to_json(t.left);
    tj["right"] = matrix_to_json(t.right);
    tj["symmetrize"] = t.symmetrize;
    terms.push_back(std::move(tj));
  }
  j["terms"] = std::move(terms);
  return j;
}

AffineMatrixExpr operator+(AffineMatrixExpr a, const AffineMatrixExpr& b) {
  a += b;
  return a;
}

AffineMatrixExpr operator-(const AffineMatrixExpr& a) {
  AffineMatrixExpr out = a;
  out *= -1.0;
  return out;
}

}  // namespace delaysof
