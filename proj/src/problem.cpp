#include "otpalm/problem.hpp"

#include <algorithm>
#include <cmath>

#include "otpalm/prox.hpp"

namespace otpalm {

void GroupPartition::rebuild_cache() {
  flat.assign(groups.size(), {});
  contig_start.assign(groups.size(), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& idx = flat[g];
    idx.reserve(groups[g].size());
    for (auto [i, j] : groups[g]) idx.push_back(i + j * rows);
    std::sort(idx.begin(), idx.end());
    bool contig = true;
    for (std::size_t t = 1; t < idx.size(); ++t) {
      if (idx[t] != idx[t - 1] + 1) { contig = false; break; }
    }
    if (contig && !idx.empty()) contig_start[g] = idx.front();
  }
}

GroupPartition GroupPartition::trivial(int m, int n) {
  GroupPartition p;
  p.rows = m;
  p.cols = n;
  p.groups.resize(1);
  p.groups[0].reserve(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) p.groups[0].emplace_back(i, j);
  p.omega = Vector::Ones(1);
  p.rebuild_cache();
  return p;
}

GroupPartition GroupPartition::from_groups(int m, int n,
                                           std::vector<std::vector<std::pair<int, int>>> groups,
                                           Vector omega) {
  GroupPartition p;
  p.rows = m;
  p.cols = n;
  p.groups = std::move(groups);
  for (auto& g : p.groups) std::sort(g.begin(), g.end());
  p.omega = omega.size() ? std::move(omega)
                         : Vector::Ones(static_cast<Eigen::Index>(p.groups.size()));
  p.rebuild_cache();
  return p;
}

namespace {

void check_marginals(const Matrix& C, const Vector& alpha, const Vector& beta) {
  if (alpha.size() != C.rows() || beta.size() != C.cols())
    throw std::invalid_argument("DimensionMismatch: marginal lengths must match the cost matrix");
  if ((alpha.array() < 0).any() || (beta.array() < 0).any())
    throw std::invalid_argument("NegativeMarginal: marginals must be componentwise nonnegative");
  if (!C.allFinite() || !alpha.allFinite() || !beta.allFinite())
    throw std::invalid_argument("NonFinite: problem data must be finite");
}

Regularizer finalize_reg(Regularizer reg, int m, int n) {
  if (reg.lambda1 < 0 || reg.lambda2 < 0)
    throw std::invalid_argument("NegativeRegularization: lambda1, lambda2 must be >= 0");
  if (reg.partition.groups.empty())
    reg.partition = GroupPartition::trivial(m, n);
  if (reg.partition.flat.size() != reg.partition.groups.size())
    reg.partition.rebuild_cache();
  return reg;
}

}  // namespace

ProblemData build_classical(Matrix C, Vector alpha, Vector beta, Regularizer reg) {
  check_marginals(C, alpha, beta);
  const int m = static_cast<int>(C.rows()), n = static_cast<int>(C.cols());
  ProblemData pd;
  pd.constraints.A = Matrix::Zero(0, m);
  pd.constraints.B = Matrix::Zero(n, 0);
  pd.constraints.S = Matrix::Zero(0, 0);
  pd.constraints.cone_r = ConeKind::Zero;
  pd.constraints.cone_c = ConeKind::Zero;
  pd.constraints.preset = PresetKind::Classical;
  pd.reg = finalize_reg(std::move(reg), m, n);
  pd.C = std::move(C);
  pd.alpha = std::move(alpha);
  pd.beta = std::move(beta);
  return pd;
}

ProblemData build_partial(Matrix C, Vector alpha, Vector beta, double s, Regularizer reg) {
  check_marginals(C, alpha, beta);
  const int m = static_cast<int>(C.rows()), n = static_cast<int>(C.cols());
  const double cap = std::min(alpha.sum(), beta.sum());
  if (!(s > 0) || s > cap)
    throw std::invalid_argument("InvalidMass: need 0 < s <= min(sum alpha, sum beta)");
  ProblemData pd;
  pd.constraints.A = Matrix::Ones(1, m);
  pd.constraints.B = Matrix::Ones(n, 1);
  pd.constraints.S = Matrix::Constant(1, 1, s);
  pd.constraints.cone_r = ConeKind::NonnegOrthant;
  pd.constraints.cone_c = ConeKind::NonnegOrthant;
  pd.constraints.preset = PresetKind::Partial;
  pd.constraints.partial_mass = s;
  pd.reg = finalize_reg(std::move(reg), m, n);
  pd.C = std::move(C);
  pd.alpha = std::move(alpha);
  pd.beta = std::move(beta);
  return pd;
}

ProblemData build_martingale(Matrix C, Vector alpha, Vector beta,
                             Matrix P, Matrix Q, Regularizer reg) {
  check_marginals(C, alpha, beta);
  const int m = static_cast<int>(C.rows()), n = static_cast<int>(C.cols());
  if (P.rows() != m || Q.rows() != n || P.cols() != Q.cols())
    throw std::invalid_argument("DimensionMismatch: P must be m x d and Q must be n x d");
  ProblemData pd;
  pd.constraints.A = Matrix::Identity(m, m);
  pd.constraints.B = Q;
  pd.constraints.S = alpha.asDiagonal() * P;
  pd.constraints.cone_r = ConeKind::Zero;
  pd.constraints.cone_c = ConeKind::Zero;
  pd.constraints.preset = PresetKind::Martingale;
  pd.reg = finalize_reg(std::move(reg), m, n);
  pd.C = std::move(C);
  pd.alpha = std::move(alpha);
  pd.beta = std::move(beta);
  return pd;
}

ProblemData build_custom(Matrix C, Vector alpha, Vector beta, Matrix A, Matrix B, Matrix S,
                         ConeKind cone_r, ConeKind cone_c, Regularizer reg) {
  check_marginals(C, alpha, beta);
  const int m = static_cast<int>(C.rows()), n = static_cast<int>(C.cols());
  if (A.cols() != m || B.rows() != n || S.rows() != A.rows() || S.cols() != B.cols())
    throw std::invalid_argument("DimensionMismatch: need A (mt x m), B (n x nt), S (mt x nt)");
  ProblemData pd;
  pd.constraints.A = std::move(A);
  pd.constraints.B = std::move(B);
  pd.constraints.S = std::move(S);
  pd.constraints.cone_r = cone_r;
  pd.constraints.cone_c = cone_c;
  pd.constraints.preset = PresetKind::Custom;
  pd.reg = finalize_reg(std::move(reg), m, n);
  pd.C = std::move(C);
  pd.alpha = std::move(alpha);
  pd.beta = std::move(beta);
  return pd;
}

std::vector<Diagnostic> validate(const ProblemData& pd) {
  std::vector<Diagnostic> out;
  const int m = pd.m(), n = pd.n();
  auto add = [&](std::string code, std::string detail) {
    out.push_back({std::move(code), std::move(detail)});
  };

  if (pd.alpha.size() != m || pd.beta.size() != n)
    add("BadDimensions", "marginal lengths do not match cost matrix");
  if (!pd.C.allFinite() || !pd.alpha.allFinite() || !pd.beta.allFinite())
    add("NonFiniteEntry", "cost or marginals contain non-finite entries");
  if ((pd.alpha.array() < 0).any()) add("NegativeMarginal", "alpha has a negative entry");
  if ((pd.beta.array() < 0).any()) add("NegativeMarginal", "beta has a negative entry");

  const auto& cs = pd.constraints;
  if (cs.A.cols() != m || cs.B.rows() != n || cs.S.rows() != cs.A.rows() ||
      cs.S.cols() != cs.B.cols())
    add("BadDimensions", "constraint matrices are inconsistent with (m, n)");
  if (cs.preset == PresetKind::Partial) {
    const double cap = std::min(pd.alpha.sum(), pd.beta.sum());
    if (!(cs.partial_mass > 0) || cs.partial_mass > cap)
      add("InvalidMass", "partial mass s outside (0, min(sum alpha, sum beta)]");
  }

  if (pd.reg.lambda1 < 0 || pd.reg.lambda2 < 0)
    add("NegativeRegularization", "lambda1 or lambda2 negative");

  const auto& part = pd.reg.partition;
  if (part.rows != m || part.cols != n) {
    add("BadDimensions", "partition shape does not match the cost matrix");
    return out;
  }
  if (part.omega.size() != static_cast<Eigen::Index>(part.groups.size()))
    add("BadDimensions", "omega length does not match the number of groups");
  else if ((part.omega.array() < 0).any())
    add("OmegaNegative", "a group weight is negative");

  std::vector<int> owner(static_cast<std::size_t>(m) * n, -1);
  for (std::size_t g = 0; g < part.groups.size(); ++g) {
    if (part.groups[g].empty()) add("GroupEmpty", "group " + std::to_string(g) + " is empty");
    for (auto [i, j] : part.groups[g]) {
      if (i < 0 || i >= m || j < 0 || j >= n) {
        add("GroupIndexOutOfRange", "group " + std::to_string(g) + " references an invalid cell");
        continue;
      }
      int& o = owner[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * m];
      if (o >= 0)
        add("GroupOverlap", "cell (" + std::to_string(i) + "," + std::to_string(j) +
                                ") appears in groups " + std::to_string(o) + " and " +
                                std::to_string(g));
      o = static_cast<int>(g);
    }
  }
  for (std::size_t t = 0; t < owner.size(); ++t) {
    if (owner[t] < 0) {
      add("GroupCoverageGap", "partition does not cover every cell");
      break;
    }
  }
  return out;
}

double primal_objective(const ProblemData& pd, const PrimalPoint& pt) {
  double obj = pd.C.cwiseProduct(pt.X).sum() + 0.5 * pd.reg.lambda2 * pt.X.squaredNorm();
  if (pd.reg.lambda1 > 0) {
    const auto& part = pd.reg.partition;
    const double* x = pt.X.data();
    double group_term = 0.0;
    for (std::size_t g = 0; g < part.groups.size(); ++g) {
      double sq = 0.0;
      for (int idx : part.flat[g]) sq += x[idx] * x[idx];
      group_term += part.omega[static_cast<Eigen::Index>(g)] * std::sqrt(sq);
    }
    obj += pd.reg.lambda1 * group_term;
  }
  return obj;
}

DualObjective dual_objective(const ProblemData& pd, const DualPoint& dp) {
  const auto& cs = pd.constraints;
  Matrix Z = dp.u * Matrix::Ones(1, pd.n()) + Matrix::Ones(pd.m(), 1) * dp.v.transpose() - pd.C;
  if (cs.has_coupling()) Z += cs.A.transpose() * dp.W * cs.B.transpose();
  ConjValue c = conj_p(pd.reg, Z);
  double lin = pd.alpha.dot(dp.u) + pd.beta.dot(dp.v);
  if (cs.has_coupling()) lin += cs.S.cwiseProduct(dp.W).sum();
  return {lin - c.value, c.domain_distance};
}

double unified_feasibility_violation(const ProblemData& pd, const PrimalPoint& pt) {
  const auto& cs = pd.constraints;
  double sq = (pt.X.rowwise().sum() + pt.y - pd.alpha).squaredNorm() +
              (pt.X.colwise().sum().transpose() + pt.z - pd.beta).squaredNorm();
  if (cs.has_coupling()) sq += (cs.A * pt.X * cs.B - cs.S).squaredNorm();
  return std::sqrt(sq);
}

ScaledInstance scale_instance(const ProblemData& pd) {
  ScaledInstance out;
  out.dual_scale = 1.0 + pd.C.norm();
  out.primal_scale = 1.0 + std::sqrt(pd.alpha.squaredNorm() + pd.beta.squaredNorm() +
                                     pd.constraints.S.squaredNorm());
  out.pd = pd;
  out.pd.C /= out.dual_scale;
  out.pd.reg.lambda1 /= out.dual_scale;
  out.pd.reg.lambda2 *= out.primal_scale / out.dual_scale;
  out.pd.alpha /= out.primal_scale;
  out.pd.beta /= out.primal_scale;
  out.pd.constraints.S /= out.primal_scale;
  out.pd.constraints.partial_mass /= out.primal_scale;
  return out;
}

double primal_feasibility_measure(const ProblemData& pd, const PrimalPoint& pt) {
  const auto& cs = pd.constraints;
  const double lin = unified_feasibility_violation(pd, pt) /
                     (1.0 + pd.alpha.norm() + pd.beta.norm() + cs.S.norm());
  const double neg = pt.X.cwiseMin(0.0).norm() / (1.0 + pt.X.norm());
  // polar-cone violation: the polar of {0} is the whole space, of R_+ is R_-.
  auto polar_violation = [](ConeKind k, const Vector& w) {
    return k == ConeKind::Zero ? w.norm() : w.cwiseMin(0.0).norm();
  };
  const double ry = polar_violation(cs.cone_r, pt.y) / (1.0 + pt.y.norm());
  const double rz = polar_violation(cs.cone_c, pt.z) / (1.0 + pt.z.norm());
  return std::max(std::max(lin, neg), std::max(ry, rz));
}

}  // namespace otpalm
