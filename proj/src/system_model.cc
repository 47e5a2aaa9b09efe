#include "covertlqr/system_model.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covertlqr/error.h"

namespace covertlqr {
namespace {

constexpr double kDefiniteTol = 1e-10;
constexpr double kSymmetryTol = 1e-8;

bool AllFinite(const Eigen::MatrixXd& M) { return M.allFinite(); }

double SymmetricMinEig(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::string Shape(const Eigen::MatrixXd& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

// Appends an error when M is not a symmetric n x n matrix that is PSD (or PD
// when `strict`).
void CheckWeight(const std::string& name, const Eigen::MatrixXd& M, int n,
                 bool strict, std::vector<std::string>* errors) {
  if (M.rows() != n || M.cols() != n) {
    errors->push_back(name + " must be " + std::to_string(n) + "x" +
                      std::to_string(n) + ", got " + Shape(M));
    return;
  }
  if (!AllFinite(M)) {
    errors->push_back(name + " has non-finite entries");
    return;
  }
  const double norm = M.norm();
  if ((M - M.transpose()).norm() > kSymmetryTol * std::max(1.0, norm)) {
    errors->push_back(name + " not symmetric");
    return;
  }
  const double min_eig = SymmetricMinEig(M);
  if (strict && !(min_eig > kDefiniteTol * norm && norm > 0.0)) {
    errors->push_back(name + " not positive definite");
  } else if (!strict && min_eig < -kDefiniteTol * norm) {
    errors->push_back(name + " not positive semidefinite");
  }
}

}  // namespace

int NumericalRank(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const Eigen::VectorXd& s = svd.singularValues();
  const double dim = static_cast<double>(std::max(M.rows(), M.cols()));
  const double threshold = dim * s(0) * 1e-12;
  if (s(0) == 0.0) return 0;
  return static_cast<int>((s.array() > threshold).count());
}

void CheckDimensions(const LinearSystem& sys) {
  const auto n = sys.A.rows();
  if (n == 0 || sys.A.cols() != n) {
    throw ConfigError("A must be square and nonempty, got " + Shape(sys.A));
  }
  if (sys.B.rows() != n || sys.B.cols() == 0) {
    throw ConfigError("B must have " + std::to_string(n) +
                      " rows and at least one column, got " + Shape(sys.B));
  }
  if (sys.C.cols() != n) {
    throw ConfigError("C must have " + std::to_string(n) + " columns, got " +
                      Shape(sys.C));
  }
}

bool CheckControllability(const LinearSystem& sys) {
  CheckDimensions(sys);
  const int n = sys.num_states();
  const int m = sys.num_inputs();
  Eigen::MatrixXd ctrb(n, n * m);
  ctrb.leftCols(m) = sys.B;
  for (int i = 1; i < n; ++i) {
    ctrb.middleCols(i * m, m) = sys.A * ctrb.middleCols((i - 1) * m, m);
  }
  return NumericalRank(ctrb) == n;
}

bool CheckObservability(const Eigen::MatrixXd& A_cl, const Eigen::MatrixXd& C) {
  if (A_cl.rows() != A_cl.cols() || C.cols() != A_cl.rows()) {
    throw ConfigError("observability test: A is " + Shape(A_cl) +
                      ", C is " + Shape(C));
  }
  const int n = static_cast<int>(A_cl.rows());
  const int p = static_cast<int>(C.rows());
  if (p == 0) return false;
  Eigen::MatrixXd obsv(n * p, n);
  obsv.topRows(p) = C;
  for (int i = 1; i < n; ++i) {
    obsv.middleRows(i * p, p) = obsv.middleRows((i - 1) * p, p) * A_cl;
  }
  return NumericalRank(obsv) == n;
}

std::string ValidationReport::Summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i) os << "; ";
    os << errors[i];
  }
  return os.str();
}

ValidationReport Validate(const LinearSystem& sys, const DesignWeights& w) {
  ValidationReport report;
  auto& errors = report.errors;
  try {
    CheckDimensions(sys);
  } catch (const std::exception& e) {
    errors.emplace_back(e.what());
    return report;
  }
  if (!AllFinite(sys.A) || !AllFinite(sys.B) || !AllFinite(sys.C)) {
    errors.emplace_back("system matrices have non-finite entries");
    return report;
  }
  const int n = sys.num_states();
  const int m = sys.num_inputs();
  if (!CheckControllability(sys)) errors.emplace_back("(A, B) not controllable");
  CheckWeight("Q", w.Q, n, /*strict=*/false, &errors);
  CheckWeight("R", w.R, m, /*strict=*/true, &errors);
  CheckWeight("V", w.V, n, /*strict=*/true, &errors);
  if (!(w.lambda >= 0.0) || !std::isfinite(w.lambda)) {
    errors.emplace_back("lambda negative");
  }
  if (!(w.epsilon > 0.0) || !std::isfinite(w.epsilon)) {
    errors.emplace_back("epsilon not positive");
  }
  if (!(w.delta > 0.0) || !std::isfinite(w.delta)) {
    errors.emplace_back("delta not positive");
  }
  return report;
}

void ValidateOrThrow(const LinearSystem& sys, const DesignWeights& w) {
  const ValidationReport report = Validate(sys, w);
  if (!report.ok()) throw ConfigError(report.Summary());
}

}  // namespace covertlqr
