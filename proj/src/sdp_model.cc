#include <cmath>
#include <cstdio>
#include <ostream>

#include "covertlqr/error.h"
#include "covertlqr/sdp.h"

namespace covertlqr::sdp {
namespace {

void RequireSameShape(const AffineMatrix& a, const AffineMatrix& b,
                      const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string("affine ") + op + ": shape mismatch " +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                      " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }
}

bool MatrixSymmetric(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).lpNorm<Eigen::Infinity>() <=
         tol * std::max(1.0, M.lpNorm<Eigen::Infinity>());
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols)
    : constant_(Eigen::MatrixXd::Zero(rows, cols)) {}

AffineMatrix::AffineMatrix(Eigen::MatrixXd constant)
    : constant_(std::move(constant)) {}

void AffineMatrix::AddTerm(int k, const Eigen::MatrixXd& coefficient) {
  if (coefficient.rows() != rows() || coefficient.cols() != cols()) {
    throw ConfigError("affine term has wrong shape");
  }
  auto [it, inserted] = terms_.try_emplace(k, coefficient);
  if (!inserted) it->second += coefficient;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix out(constant_.transpose());
  for (const auto& [k, c] : terms_) out.terms_.emplace(k, c.transpose());
  return out;
}

AffineMatrix AffineMatrix::Trace() const {
  if (rows() != cols()) throw ConfigError("trace of a non-square expression");
  AffineMatrix out(Eigen::MatrixXd::Constant(1, 1, constant_.trace()));
  for (const auto& [k, c] : terms_) {
    out.terms_.emplace(k, Eigen::MatrixXd::Constant(1, 1, c.trace()));
  }
  return out;
}

AffineMatrix AffineMatrix::Symmetrized() const {
  return 0.5 * (*this + transpose());
}

Eigen::MatrixXd AffineMatrix::Evaluate(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd out = constant_;
  for (const auto& [k, c] : terms_) {
    if (k >= z.size()) throw ConfigError("unknown index out of range");
    out += z(k) * c;
  }
  return out;
}

bool AffineMatrix::IsSymmetric(double tol) const {
  if (!MatrixSymmetric(constant_, tol)) return false;
  for (const auto& [k, c] : terms_) {
    if (!MatrixSymmetric(c, tol)) return false;
  }
  return true;
}

AffineMatrix AffineMatrix::Blocks(
    const std::vector<std::vector<AffineMatrix>>& blocks) {
  if (blocks.empty() || blocks.front().empty()) return AffineMatrix(0, 0);
  const std::size_t nc = blocks.front().size();
  std::vector<Eigen::Index> row_sizes, col_sizes(nc);
  for (std::size_t j = 0; j < nc; ++j) col_sizes[j] = blocks.front()[j].cols();
  for (const auto& row : blocks) {
    if (row.size() != nc) throw ConfigError("ragged block matrix");
    row_sizes.push_back(row.front().rows());
    for (std::size_t j = 0; j < nc; ++j) {
      if (row[j].rows() != row.front().rows() || row[j].cols() != col_sizes[j]) {
        throw ConfigError("block matrix: inconsistent block shapes");
      }
    }
  }
  Eigen::Index total_rows = 0, total_cols = 0;
  for (auto r : row_sizes) total_rows += r;
  for (auto c : col_sizes) total_cols += c;

  AffineMatrix out(total_rows, total_cols);
  Eigen::Index r0 = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Eigen::Index c0 = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      const AffineMatrix& b = blocks[i][j];
      out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
      for (const auto& [k, c] : b.terms_) {
        auto [it, inserted] = out.terms_.try_emplace(
            k, Eigen::MatrixXd::Zero(total_rows, total_cols));
        it->second.block(r0, c0, b.rows(), b.cols()) += c;
      }
      c0 += col_sizes[j];
    }
    r0 += row_sizes[i];
  }
  return out;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
  RequireSameShape(*this, other, "+");
  constant_ += other.constant_;
  for (const auto& [k, c] : other.terms_) AddTerm(k, c);
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& other) {
  RequireSameShape(*this, other, "-");
  constant_ -= other.constant_;
  for (const auto& [k, c] : other.terms_) AddTerm(k, -c);
  return *this;
}

AffineMatrix& AffineMatrix::operator*=(double s) {
  constant_ *= s;
  for (auto& [k, c] : terms_) c *= s;
  return *this;
}

AffineMatrix operator*(const Eigen::MatrixXd& left, const AffineMatrix& a) {
  if (left.cols() != a.rows()) throw ConfigError("affine product: shape mismatch");
  AffineMatrix out(left * a.constant_);
  for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, left * c);
  return out;
}

AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXd& right) {
  if (a.cols() != right.rows()) throw ConfigError("affine product: shape mismatch");
  AffineMatrix out(a.constant_ * right);
  for (const auto& [k, c] : a.terms_) out.terms_.emplace(k, c * right);
  return out;
}

const char* ToString(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kLmiNonPositive: return "lmi_nonpos";
    case ConstraintKind::kEquality: return "eq";
    case ConstraintKind::kScalarNonPositive: return "ineq_nonpos";
    case ConstraintKind::kPsd: return "psd";
  }
  return "?";
}

const char* ToString(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kNumericalFailure: return "numerical_failure";
  }
  return "?";
}

AffineMatrix Model::AddSymmetricVariable(const std::string& name, int k) {
  if (k <= 0 || variable_exprs_.count(name)) {
    throw ConfigError("bad or duplicate variable '" + name + "'");
  }
  VariableInfo info{name, VariableKind::kSymmetric, k, k, num_unknowns_,
                    k * (k + 1) / 2};
  AffineMatrix expr(k, k);
  int idx = num_unknowns_;
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i <= j; ++i) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k, k);
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      expr.AddTerm(idx++, e);
    }
  }
  num_unknowns_ = idx;
  variables_.push_back(info);
  variable_exprs_.emplace(name, expr);
  return expr;
}

AffineMatrix Model::AddMatrixVariable(const std::string& name, int rows,
                                      int cols) {
  if (rows <= 0 || cols <= 0 || variable_exprs_.count(name)) {
    throw ConfigError("bad or duplicate variable '" + name + "'");
  }
  VariableInfo info{name, VariableKind::kRectangular, rows, cols, num_unknowns_,
                    rows * cols};
  AffineMatrix expr(rows, cols);
  int idx = num_unknowns_;
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, cols);
      e(i, j) = 1.0;
      expr.AddTerm(idx++, e);
    }
  }
  num_unknowns_ = idx;
  variables_.push_back(info);
  variable_exprs_.emplace(name, expr);
  return expr;
}

void Model::CheckExpression(const AffineMatrix& expr,
                            const std::string& label) const {
  for (const auto& [k, c] : expr.terms()) {
    if (k < 0 || k >= num_unknowns_) {
      throw ConfigError("constraint '" + label + "' references an undeclared unknown");
    }
  }
}

void Model::Minimize(const AffineMatrix& objective) {
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw ConfigError("objective must be scalar");
  }
  CheckExpression(objective, "objective");
  objective_ = objective;
}

void Model::AddLmiNonPositive(const AffineMatrix& expr, const std::string& label) {
  CheckExpression(expr, label);
  if (expr.rows() != expr.cols() || !expr.IsSymmetric(1e-10)) {
    throw ConfigError("LMI '" + label + "' is not symmetric-valued");
  }
  constraints_.push_back({ConstraintKind::kLmiNonPositive, label, expr.Symmetrized()});
}

void Model::AddEquality(const AffineMatrix& expr, const std::string& label) {
  CheckExpression(expr, label);
  constraints_.push_back({ConstraintKind::kEquality, label, expr});
}

void Model::AddScalarNonPositive(const AffineMatrix& expr,
                                 const std::string& label) {
  CheckExpression(expr, label);
  if (expr.rows() != 1 || expr.cols() != 1) {
    throw ConfigError("scalar inequality '" + label + "' is not 1x1");
  }
  constraints_.push_back({ConstraintKind::kScalarNonPositive, label, expr});
}

void Model::AddPsd(const std::string& variable, const std::string& label) {
  const VariableInfo& info = this->variable(variable);
  if (info.kind != VariableKind::kSymmetric) {
    throw ConfigError("PSD constraint on non-symmetric variable '" + variable + "'");
  }
  constraints_.push_back(
      {ConstraintKind::kPsd, label, variable_exprs_.at(variable)});
}

const VariableInfo& Model::variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v;
  }
  throw ConfigError("unknown variable '" + name + "'");
}

const AffineMatrix& Model::variable_expression(const std::string& name) const {
  auto it = variable_exprs_.find(name);
  if (it == variable_exprs_.end()) throw ConfigError("unknown variable '" + name + "'");
  return it->second;
}

Eigen::MatrixXd Model::ValueOf(const std::string& name,
                               const Eigen::VectorXd& z) const {
  return variable_expression(name).Evaluate(z);
}

Eigen::VectorXd Model::Pack(
    const std::map<std::string, Eigen::MatrixXd>& values) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(num_unknowns_);
  for (const auto& [name, value] : values) {
    const VariableInfo& info = variable(name);
    if (value.rows() != info.rows || value.cols() != info.cols) {
      throw ConfigError("Pack: value for '" + name + "' has wrong shape");
    }
    int idx = info.offset;
    if (info.kind == VariableKind::kSymmetric) {
      for (int j = 0; j < info.cols; ++j) {
        for (int i = 0; i <= j; ++i) z(idx++) = 0.5 * (value(i, j) + value(j, i));
      }
    } else {
      for (int j = 0; j < info.cols; ++j) {
        for (int i = 0; i < info.rows; ++i) z(idx++) = value(i, j);
      }
    }
  }
  return z;
}

void Model::Dump(std::ostream& os) const {
  auto dump_expr = [&os](const AffineMatrix& e) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      for (Eigen::Index i = 0; i < e.rows(); ++i) {
        if (e.constant()(i, j) != 0.0) {
          os << "const " << i << ' ' << j << ' ' << FormatDouble(e.constant()(i, j))
             << '\n';
        }
      }
    }
    for (const auto& [k, c] : e.terms()) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
          if (c(i, j) != 0.0) {
            os << "coef " << k << ' ' << i << ' ' << j << ' '
               << FormatDouble(c(i, j)) << '\n';
          }
        }
      }
    }
  };
  os << "SDPDUMP v1\n";
  os << "unknowns " << num_unknowns_ << '\n';
  os << "variables " << variables_.size() << '\n';
  for (const auto& v : variables_) {
    os << "var " << v.name << ' '
       << (v.kind == VariableKind::kSymmetric ? "sym" : "mat") << ' ' << v.rows
       << ' ' << v.cols << ' ' << v.offset << ' ' << v.count << '\n';
  }
  os << "objective minimize\n";
  dump_expr(objective_);
  os << "constraints " << constraints_.size() << '\n';
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const Constraint& c = constraints_[i];
    os << "constraint " << i << ' ' << ToString(c.kind) << ' ' << c.expr.rows()
       << ' ' << c.expr.cols() << ' ' << c.label << '\n';
    dump_expr(c.expr);
  }
  os << "end\n";
}

}  // namespace covertlqr::sdp
