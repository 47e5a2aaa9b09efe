// Primal-dual interior-point backend.
//
// Equalities are eliminated first (z = z0 + N w). The remaining conic
// constraints form G(w) = F0 + sum_i w_i F_i >= 0 over a block-diagonal
// cone. Linearly dependent directions are removed with an SVD, which also
// makes the constraint matrices orthonormal. The reduced problem is the dual
// of the standard-form pair
//   min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
//   max b'y     s.t.  sum_i y_i A_i + Z = C,  Z >= 0
// with C = F0 and y = -u, solved by HKM search directions and Mehrotra
// predictor-corrector steps from an infeasible start. On numerical failure
// the returned point is the best iterate that passed the user-space audit,
// if any.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "covertlqr/error.h"
#include "covertlqr/sdp.h"

namespace covertlqr::sdp {
namespace {

using Blocks = std::vector<Eigen::MatrixXd>;

double Inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double Norm(const Blocks& a) { return std::sqrt(Inner(a, a)); }

Blocks Axpy(const Blocks& x, double alpha, const Blocks& d) {
  Blocks out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + alpha * d[k];
  return out;
}

Eigen::MatrixXd Sym(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

double MinEig(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sym(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double MaxEig(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sym(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// Largest alpha with X + alpha dX >= 0 (infinity if unbounded); -1 when X is
// not numerically positive definite.
double MaxStep(const Blocks& X, const Blocks& dX) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < X.size(); ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(X[k]);
    if (llt.info() != Eigen::Success) return -1.0;
    Eigen::MatrixXd T = llt.matrixL().solve(dX[k]);
    T = llt.matrixL().solve(T.transpose().eval());
    const double lmin = MinEig(T);
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

struct ConicProblem {
  std::vector<int> sizes;
  Blocks C;
  std::vector<Blocks> A;  // orthonormal under the trace inner product
  Eigen::VectorXd b;
};

struct IpmResult {
  enum Outcome { kConverged, kInfeasible, kUnbounded, kFailed } outcome = kFailed;
  Eigen::VectorXd y;
  double pinf = 0.0, dinf = 0.0, gap = 0.0;
  int iterations = 0;
};

Eigen::VectorXd ApplyA(const ConicProblem& p, const Blocks& X) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(p.A.size()));
  for (std::size_t i = 0; i < p.A.size(); ++i) out(static_cast<Eigen::Index>(i)) = Inner(p.A[i], X);
  return out;
}

Blocks ApplyAt(const ConicProblem& p, const Eigen::VectorXd& y) {
  Blocks out(p.sizes.size());
  for (std::size_t k = 0; k < p.sizes.size(); ++k) {
    out[k] = Eigen::MatrixXd::Zero(p.sizes[k], p.sizes[k]);
  }
  for (std::size_t i = 0; i < p.A.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0.0) continue;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += yi * p.A[i][k];
  }
  return out;
}

// `accept` decides whether a scaled-converged iterate is good enough in the
// caller's own residual measure.
template <typename Accept>
IpmResult RunIpm(const ConicProblem& p, const SolveOptions& opt, Accept accept) {
  const std::size_t nb = p.sizes.size();
  const int m = static_cast<int>(p.A.size());
  int total = 0;
  for (int s : p.sizes) total += s;

  const double normb = p.b.norm();
  const double normC = Norm(p.C);

  Blocks X(nb), Z(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const double s = p.sizes[k];
    double a_norm = 0.0, xi_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      const double ak = p.A[i][k].norm();
      a_norm = std::max(a_norm, ak);
      xi_ratio = std::max(xi_ratio, (1.0 + std::abs(p.b(i))) / (1.0 + ak));
    }
    const double xi = std::max({10.0, std::sqrt(s), s * xi_ratio});
    const double eta = std::max({10.0, std::sqrt(s), a_norm, p.C[k].norm()});
    X[k] = xi * Eigen::MatrixXd::Identity(p.sizes[k], p.sizes[k]);
    Z[k] = eta * Eigen::MatrixXd::Identity(p.sizes[k], p.sizes[k]);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  IpmResult res;
  int stalls = 0;
  std::optional<IpmResult> best;
  auto fail = [&]() { return best ? *best : res; };
  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    res.iterations = iter;
    const Eigen::VectorXd AX = ApplyA(p, X);
    const Eigen::VectorXd rp = p.b - AX;
    const Blocks Aty = ApplyAt(p, y);
    Blocks Rd(nb);
    for (std::size_t k = 0; k < nb; ++k) Rd[k] = p.C[k] - Z[k] - Aty[k];

    const double xz = Inner(X, Z);
    const double mu = xz / total;
    const double pobj = Inner(p.C, X);
    const double dobj = p.b.dot(y);
    res.y = y;
    res.pinf = rp.norm() / (1.0 + normb);
    res.dinf = Norm(Rd) / (1.0 + normC);
    res.gap = xz / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (res.pinf <= opt.feas_tol && res.dinf <= opt.feas_tol &&
        res.gap <= opt.gap_tol && accept(y)) {
      res.outcome = IpmResult::kConverged;
      return res;
    }
    // Last-resort result: the user-space point with the smallest gap among
    // iterates that pass the caller's audit.
    if (res.dinf <= opt.feas_tol && (!best || res.gap < best->gap) && accept(y)) best = res;
    if (pobj < 0.0 && AX.norm() / -pobj < 1e-8) {
      res.outcome = IpmResult::kInfeasible;
      return res;
    }
    if (dobj > 0.0) {
      Blocks CmRd(nb);
      for (std::size_t k = 0; k < nb; ++k) CmRd[k] = p.C[k] - Rd[k];
      if (Norm(CmRd) / dobj < 1e-8) {
        res.outcome = IpmResult::kUnbounded;
        return res;
      }
    }
    if (iter == opt.max_iterations) break;

    Blocks Zinv(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(Z[k]);
      if (llt.info() != Eigen::Success) return fail();
      Zinv[k] = llt.solve(Eigen::MatrixXd::Identity(p.sizes[k], p.sizes[k]));
    }

    // Schur complement M_ij = tr(A_i X A_j Z^{-1}).
    Eigen::MatrixXd M(m, m);
    std::vector<Blocks> T(m, Blocks(nb));
    for (int j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < nb; ++k) T[j][k] = X[k] * p.A[j][k] * Zinv[k];
    }
    for (int i = 0; i < m; ++i) {
      for (int j = i; j < m; ++j) {
        M(i, j) = M(j, i) = 0.5 * (Inner(p.A[i], T[j]) + Inner(p.A[j], T[i]));
      }
    }
    Eigen::LLT<Eigen::MatrixXd> schur(M);
    Eigen::LDLT<Eigen::MatrixXd> schur_ldlt;
    const bool use_llt = schur.info() == Eigen::Success;
    if (!use_llt) schur_ldlt.compute(M);

    Blocks XRdZinv(nb);
    for (std::size_t k = 0; k < nb; ++k) XRdZinv[k] = X[k] * Rd[k] * Zinv[k];
    const Eigen::VectorXd base_rhs = rp + ApplyA(p, XRdZinv);

    auto direction = [&](const Blocks& G, Blocks& dX, Eigen::VectorXd& dy, Blocks& dZ) {
      auto solve = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
        if (use_llt) return schur.solve(rhs);
        return schur_ldlt.solve(rhs);
      };
      dy = solve(base_rhs - ApplyA(p, G));
      dX.resize(nb);
      dZ.resize(nb);
      auto fill = [&](const Eigen::VectorXd& d) {
        const Blocks Atdy = ApplyAt(p, d);
        for (std::size_t k = 0; k < nb; ++k) {
          dZ[k] = Rd[k] - Atdy[k];
          dX[k] = Sym(G[k] - X[k] * dZ[k] * Zinv[k]);
        }
        return (rp - ApplyA(p, dX)).eval();
      };
      // Refinement against the unformed operator keeps A(dX) = rp accurate
      // when the Schur complement is ill-conditioned.
      Eigen::VectorXd r = fill(dy);
      for (int refine = 0; refine < 2; ++refine) {
        const Eigen::VectorXd trial = dy + solve(r);
        const Eigen::VectorXd r_trial = fill(trial);
        if (!(r_trial.norm() < 0.5 * r.norm())) {
          fill(dy);
          break;
        }
        dy = trial;
        r = r_trial;
      }
    };

    Blocks G(nb), dXa, dZa;
    Eigen::VectorXd dya;
    for (std::size_t k = 0; k < nb; ++k) G[k] = -X[k];
    direction(G, dXa, dya, dZa);
    const double ap_a = std::min(1.0, MaxStep(X, dXa));
    const double ad_a = std::min(1.0, MaxStep(Z, dZa));
    if (ap_a < 0.0 || ad_a < 0.0) return fail();
    const double mu_aff =
        Inner(Axpy(X, ap_a, dXa), Axpy(Z, ad_a, dZa)) / total;
    const double sigma = std::min(1.0, std::pow(std::max(mu_aff, 0.0) / mu, 3.0));

    for (std::size_t k = 0; k < nb; ++k) {
      G[k] = sigma * mu * Zinv[k] - X[k] - dXa[k] * dZa[k] * Zinv[k];
    }
    Blocks dX, dZ;
    Eigen::VectorXd dy;
    direction(G, dX, dy, dZ);

    const double gamma = 0.9 + 0.09 * std::min(ap_a, ad_a);
    const double ap = std::min(1.0, gamma * MaxStep(X, dX));
    const double ad = std::min(1.0, gamma * MaxStep(Z, dZ));
    if (!(ap > 0.0) || !(ad > 0.0) || !dy.allFinite()) return fail();
    X = Axpy(X, ap, dX);
    {
      // The A_i are orthonormal, so X + A^T(b - A(X)) restores A(X) = b
      // exactly. Keep it only while X stays positive definite.
      const Blocks corr = ApplyAt(p, p.b - ApplyA(p, X));
      Blocks Xc = Axpy(X, 1.0, corr);
      bool pd = true;
      for (std::size_t k = 0; k < nb && pd; ++k) {
        pd = Eigen::LLT<Eigen::MatrixXd>(Xc[k]).info() == Eigen::Success;
      }
      if (pd) X = std::move(Xc);
    }
    Z = Axpy(Z, ad, dZ);
    y += ad * dy;

    stalls = (ap < 1e-10 && ad < 1e-10) ? stalls + 1 : 0;
    if (stalls >= 3) return fail();
  }
  return fail();
}

}  // namespace

const Eigen::MatrixXd& Solution::value(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("solution has no variable '" + name + "'");
  return it->second;
}

AuditReport Audit(const Model& model, const Eigen::VectorXd& z, double feas_tol) {
  if (z.size() != model.num_unknowns()) {
    throw ConfigError("audit: unknown vector has wrong length");
  }
  AuditReport report;
  report.passed = true;
  for (const Constraint& c : model.constraints()) {
    const Eigen::MatrixXd val = c.expr.Evaluate(z);
    double scale = 1.0 + c.expr.constant().norm();
    for (const auto& [k, coef] : c.expr.terms()) scale += std::abs(z(k)) * coef.norm();
    ConstraintResidual r{c.label, c.kind};
    switch (c.kind) {
      case ConstraintKind::kLmiNonPositive: r.absolute = std::max(0.0, MaxEig(val)); break;
      case ConstraintKind::kPsd: r.absolute = std::max(0.0, -MinEig(val)); break;
      case ConstraintKind::kScalarNonPositive: r.absolute = std::max(0.0, val(0, 0)); break;
      case ConstraintKind::kEquality:
        r.absolute = val.size() ? val.cwiseAbs().maxCoeff() : 0.0;
        break;
    }
    r.relative = r.absolute / scale;
    r.ok = r.relative <= 10.0 * feas_tol;
    report.max_relative = std::max(report.max_relative, r.relative);
    report.passed = report.passed && r.ok;
    report.residuals.push_back(std::move(r));
  }
  return report;
}

AuditReport Audit(const Model& model, const Solution& solution, double feas_tol) {
  return Audit(model, solution.z, feas_tol);
}

Solution Solve(const Model& model, const SolveOptions& options) {
  const int nz = model.num_unknowns();
  Solution sol;
  sol.z = Eigen::VectorXd::Zero(nz);

  auto finish = [&](Status status, const Eigen::VectorXd& z) {
    sol.status = status;
    sol.z = z;
    for (const auto& v : model.variables()) sol.values[v.name] = model.ValueOf(v.name, z);
    sol.objective = model.objective().Evaluate(z)(0, 0);
    sol.primal_residual = Audit(model, z, options.feas_tol).max_relative;
    return sol;
  };

  // Equality elimination.
  std::vector<const Constraint*> eqs, cones;
  int n_eq_rows = 0;
  for (const auto& c : model.constraints()) {
    if (c.kind == ConstraintKind::kEquality) {
      eqs.push_back(&c);
      n_eq_rows += static_cast<int>(c.expr.rows() * c.expr.cols());
    } else {
      cones.push_back(&c);
    }
  }
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(nz);
  Eigen::MatrixXd N = Eigen::MatrixXd::Identity(nz, nz);
  if (n_eq_rows > 0 && nz > 0) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n_eq_rows, nz);
    Eigen::VectorXd e(n_eq_rows);
    int row = 0;
    for (const Constraint* c : eqs) {
      const auto& expr = c->expr;
      for (Eigen::Index j = 0; j < expr.cols(); ++j) {
        for (Eigen::Index i = 0; i < expr.rows(); ++i, ++row) {
          e(row) = -expr.constant()(i, j);
          for (const auto& [k, coef] : expr.terms()) E(row, k) = coef(i, j);
        }
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    int rank = 0;
    while (rank < s.size() && s(rank) > 1e-12 * std::max(1.0, smax) * std::max(n_eq_rows, nz)) ++rank;
    const Eigen::MatrixXd& U = svd.matrixU();
    const Eigen::MatrixXd& V = svd.matrixV();
    z0 = V.leftCols(rank) *
         (U.leftCols(rank).transpose() * e).cwiseQuotient(s.head(rank));
    if ((E * z0 - e).norm() > 1e-9 * (1.0 + e.norm())) {
      return finish(Status::kInfeasible, z0);
    }
    N = V.rightCols(nz - rank);
  }
  const int nw = static_cast<int>(N.cols());

  // Objective in w.
  const AffineMatrix& obj = model.objective();
  Eigen::VectorXd c_z = Eigen::VectorXd::Zero(nz);
  for (const auto& [k, coef] : obj.terms()) c_z(k) = coef(0, 0);
  const Eigen::VectorXd c_w = N.transpose() * c_z;

  // Conic blocks G(w) = F0 + sum_i w_i F_i >= 0.
  std::vector<int> sizes;
  Blocks F0;
  std::vector<Blocks> F(nw);
  for (const Constraint* c : cones) {
    const double sign = c->kind == ConstraintKind::kPsd ? 1.0 : -1.0;
    const int s = static_cast<int>(c->expr.rows());
    sizes.push_back(s);
    Eigen::MatrixXd f0 = c->expr.constant();
    std::vector<Eigen::MatrixXd> fi(nw, Eigen::MatrixXd::Zero(s, s));
    for (const auto& [k, coef] : c->expr.terms()) {
      f0 += z0(k) * coef;
      for (int i = 0; i < nw; ++i) {
        if (N(k, i) != 0.0) fi[i] += N(k, i) * coef;
      }
    }
    // Equilibrate blocks so a large block does not mask residuals in a
    // small one.
    double mag = 1.0;
    for (const auto& f : fi) mag = std::max(mag, f.norm());
    F0.push_back((sign / mag) * Sym(f0));
    for (int i = 0; i < nw; ++i) F[i].push_back((sign / mag) * Sym(fi[i]));
  }

  // Orthonormal basis of the reachable constraint directions.
  int total_entries = 0;
  for (int s : sizes) total_entries += s * s;
  Eigen::MatrixXd Fmat(total_entries, nw);
  for (int i = 0; i < nw; ++i) {
    int off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      Fmat.col(i).segment(off, sizes[k] * sizes[k]) =
          Eigen::Map<const Eigen::VectorXd>(F[i][k].data(), sizes[k] * sizes[k]);
      off += sizes[k] * sizes[k];
    }
  }
  int r = 0;
  Eigen::MatrixXd Ur, Vr;
  Eigen::VectorXd sr;
  if (total_entries > 0 && nw > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Fmat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    while (r < s.size() && s(r) > 1e-12 * std::max(1.0, s(0)) * std::max(total_entries, nw)) ++r;
    Ur = svd.matrixU().leftCols(r);
    Vr = svd.matrixV().leftCols(r);
    sr = s.head(r);
  } else {
    Vr = Eigen::MatrixXd::Zero(nw, 0);
  }
  const Eigen::VectorXd c_null = c_w - Vr * (Vr.transpose() * c_w);
  const bool free_direction = c_null.norm() > 1e-9 * std::max(1.0, c_w.norm());

  auto z_from_u = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    if (r == 0) return z0;
    return z0 + N * (Vr * u.cwiseQuotient(sr));
  };

  if (r == 0) {
    bool feasible = true;
    for (const auto& f : F0) feasible = feasible && MinEig(f) >= -options.feas_tol * (1.0 + f.norm());
    if (!feasible) return finish(Status::kInfeasible, z0);
    return finish(free_direction ? Status::kUnbounded : Status::kOptimal, z0);
  }

  ConicProblem p;
  p.sizes = sizes;
  p.b = c_w.transpose() * Vr;
  p.b = p.b.cwiseQuotient(sr);
  p.A.resize(r);
  for (int j = 0; j < r; ++j) {
    int off = 0;
    for (int s : sizes) {
      Eigen::MatrixXd Ak = Eigen::Map<const Eigen::MatrixXd>(Ur.col(j).data() + off, s, s);
      p.A[j].push_back(Sym(Ak));
      off += s * s;
    }
  }
  const double scale_C = std::max(1.0, Norm(F0));
  const double scale_b = std::max(1.0, p.b.norm());
  p.C = F0;
  for (auto& c : p.C) c /= scale_C;
  p.b /= scale_b;

  auto recover = [&](const Eigen::VectorXd& y_scaled) {
    return z_from_u(-scale_C * y_scaled);
  };
  auto accept = [&](const Eigen::VectorXd& y_scaled) {
    return Audit(model, recover(y_scaled), options.feas_tol).max_relative <= options.feas_tol;
  };

  const IpmResult ipm = RunIpm(p, options, accept);
  sol.iterations = ipm.iterations;
  sol.dual_residual = ipm.pinf;
  sol.gap = ipm.gap;
  const Eigen::VectorXd z = recover(ipm.y);
  switch (ipm.outcome) {
    case IpmResult::kConverged:
      return finish(free_direction ? Status::kUnbounded : Status::kOptimal, z);
    case IpmResult::kInfeasible:
      return finish(Status::kInfeasible, z);
    case IpmResult::kUnbounded:
      return finish(Status::kUnbounded, z);
    case IpmResult::kFailed:
      break;
  }
  return finish(Status::kNumericalFailure, z);
}

}  // namespace covertlqr::sdp
