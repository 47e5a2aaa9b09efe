#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

// A small semidefinite-programming layer: symmetric and rectangular matrix
// variables, affine matrix expressions built from them, and LMI / equality /
// scalar-inequality / PSD constraints with a linear objective to minimize.
// Models are solved by an embedded primal-dual interior-point method.

namespace covertlqr::sdp {

/// Matrix-valued affine function of the model's scalar unknowns,
///   constant + sum_k coefficient_k * z_k.
/// Only affine operations are offered; there is no product of two
/// expressions.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Eigen::Index rows, Eigen::Index cols);
  explicit AffineMatrix(Eigen::MatrixXd constant);

  static AffineMatrix Zero(Eigen::Index rows, Eigen::Index cols) {
    return AffineMatrix(rows, cols);
  }
  static AffineMatrix Identity(Eigen::Index n) {
    return AffineMatrix(Eigen::MatrixXd::Identity(n, n));
  }

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }

  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::map<int, Eigen::MatrixXd>& terms() const { return terms_; }

  /// Adds coefficient * z_k.
  void AddTerm(int k, const Eigen::MatrixXd& coefficient);

  AffineMatrix transpose() const;
  /// 1x1 expression holding the trace.
  AffineMatrix Trace() const;
  /// (E + E^T) / 2.
  AffineMatrix Symmetrized() const;

  Eigen::MatrixXd Evaluate(const Eigen::VectorXd& z) const;

  /// True when the constant and every coefficient are symmetric to `tol`
  /// relative to their magnitudes.
  bool IsSymmetric(double tol = 1e-12) const;

  /// Block matrix assembly. Blocks in a row share a row count and blocks in
  /// a column share a column count.
  static AffineMatrix Blocks(
      const std::vector<std::vector<AffineMatrix>>& blocks);

  AffineMatrix& operator+=(const AffineMatrix& other);
  AffineMatrix& operator-=(const AffineMatrix& other);
  AffineMatrix& operator*=(double s);

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) {
    return a += b;
  }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) {
    return a -= b;
  }
  friend AffineMatrix operator-(AffineMatrix a) { return a *= -1.0; }
  friend AffineMatrix operator*(double s, AffineMatrix a) { return a *= s; }
  friend AffineMatrix operator*(AffineMatrix a, double s) { return a *= s; }
  friend AffineMatrix operator+(AffineMatrix a, const Eigen::MatrixXd& b) {
    return a += AffineMatrix(b);
  }
  friend AffineMatrix operator+(const Eigen::MatrixXd& b, AffineMatrix a) {
    return a += AffineMatrix(b);
  }
  friend AffineMatrix operator-(AffineMatrix a, const Eigen::MatrixXd& b) {
    return a -= AffineMatrix(b);
  }
  friend AffineMatrix operator-(const Eigen::MatrixXd& b, const AffineMatrix& a) {
    return AffineMatrix(b) - a;
  }
  friend AffineMatrix operator*(const Eigen::MatrixXd& left,
                                const AffineMatrix& a);
  friend AffineMatrix operator*(const AffineMatrix& a,
                                const Eigen::MatrixXd& right);

 private:
  Eigen::MatrixXd constant_;
  std::map<int, Eigen::MatrixXd> terms_;
};

enum class VariableKind { kSymmetric, kRectangular };

struct VariableInfo {
  std::string name;
  VariableKind kind = VariableKind::kRectangular;
  int rows = 0;
  int cols = 0;
  int offset = 0;  // index of the first scalar unknown
  int count = 0;   // number of scalar unknowns
};

enum class ConstraintKind {
  kLmiNonPositive,     // expr <= 0 in the semidefinite order
  kEquality,           // expr == 0 entrywise
  kScalarNonPositive,  // 1x1 expr <= 0
  kPsd,                // symmetric variable >= 0
};

const char* ToString(ConstraintKind kind);

struct Constraint {
  ConstraintKind kind;
  std::string label;
  AffineMatrix expr;
};

class Model {
 public:
  /// k x k symmetric variable, parameterized by its upper triangle.
  AffineMatrix AddSymmetricVariable(const std::string& name, int k);
  AffineMatrix AddMatrixVariable(const std::string& name, int rows, int cols);

  /// Objective to minimize; must be 1x1.
  void Minimize(const AffineMatrix& objective);

  void AddLmiNonPositive(const AffineMatrix& expr, const std::string& label);
  void AddEquality(const AffineMatrix& expr, const std::string& label);
  void AddScalarNonPositive(const AffineMatrix& expr, const std::string& label);
  void AddPsd(const std::string& variable, const std::string& label);

  int num_unknowns() const { return num_unknowns_; }
  const std::vector<VariableInfo>& variables() const { return variables_; }
  const VariableInfo& variable(const std::string& name) const;
  const AffineMatrix& variable_expression(const std::string& name) const;
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const AffineMatrix& objective() const { return objective_; }

  /// Value of a variable at the unknown vector z.
  Eigen::MatrixXd ValueOf(const std::string& name, const Eigen::VectorXd& z) const;
  /// Inverse of ValueOf over all variables; missing variables read as zero.
  Eigen::VectorXd Pack(const std::map<std::string, Eigen::MatrixXd>& values) const;

  /// Text dump, header line "SDPDUMP v1"; see docs/sdpdump.md.
  void Dump(std::ostream& os) const;

 private:
  void CheckExpression(const AffineMatrix& expr, const std::string& label) const;

  int num_unknowns_ = 0;
  std::vector<VariableInfo> variables_;
  std::map<std::string, AffineMatrix> variable_exprs_;
  std::vector<Constraint> constraints_;
  AffineMatrix objective_ = AffineMatrix(1, 1);
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

const char* ToString(Status status);

struct SolveOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 100;
};

struct Solution {
  Status status = Status::kNumericalFailure;
  Eigen::VectorXd z;  // scalar unknowns, laid out as in Model::variables()
  std::map<std::string, Eigen::MatrixXd> values;
  double objective = 0.0;
  double primal_residual = 0.0;  // relative conic/equality violation
  double dual_residual = 0.0;
  double gap = 0.0;  // relative duality gap
  int iterations = 0;

  const Eigen::MatrixXd& value(const std::string& name) const;
};

/// Solves the model. Deterministic for identical input.
Solution Solve(const Model& model, const SolveOptions& options = {});

struct ConstraintResidual {
  std::string label;
  ConstraintKind kind;
  double absolute = 0.0;  // lambda_max for LMIs, max |entry| for equalities
  double relative = 0.0;  // absolute / (1 + magnitude of the evaluated terms)
  bool ok = false;
};

struct AuditReport {
  std::vector<ConstraintResidual> residuals;
  double max_relative = 0.0;
  bool passed = false;
};

/// Re-evaluates every constraint at z. A constraint passes when its relative
/// residual is within 10 * feas_tol.
AuditReport Audit(const Model& model, const Eigen::VectorXd& z,
                  double feas_tol = 1e-8);
AuditReport Audit(const Model& model, const Solution& solution,
                  double feas_tol = 1e-8);

}  // namespace covertlqr::sdp
