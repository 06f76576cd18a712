#include "otpalm/auglag.hpp"

#include <cmath>

namespace otpalm {

namespace {

Matrix dual_combination(const DualPoint& dp, const ProblemData& pd) {
  Matrix E = dp.u * Matrix::Ones(1, pd.n()) + Matrix::Ones(pd.m(), 1) * dp.v.transpose();
  if (pd.constraints.has_coupling())
    E += pd.constraints.A.transpose() * dp.W * pd.constraints.B.transpose();
  return E;
}

double p_value(const Regularizer& reg, const Matrix& X) {
  double val = 0.5 * reg.lambda2 * X.squaredNorm();
  if (reg.lambda1 > 0) {
    const auto& part = reg.partition;
    for (std::size_t g = 0; g < part.groups.size(); ++g)
      val += reg.lambda1 * part.omega[static_cast<Eigen::Index>(g)] *
             detail::gather_group(part, g, X).norm();
  }
  return val;
}

}  // namespace

Matrix eval_shifted_argument(const ALParams& ap, const DualPoint& dp, const ProblemData& pd) {
  return ap.anchor_primal.X + ap.sigma * (dual_combination(dp, pd) - pd.C);
}

double eval_Psi(const ALParams& ap, const DualPoint& dp, const ProblemData& pd) {
  const double sigma = ap.sigma;
  const auto& cs = pd.constraints;

  double val = -pd.alpha.dot(dp.u) - pd.beta.dot(dp.v);
  if (cs.has_coupling()) val -= cs.S.cwiseProduct(dp.W).sum();

  const auto& anc = ap.anchor_primal;
  val -= (anc.X.squaredNorm() + anc.y.squaredNorm() + anc.z.squaredNorm()) / (2.0 * sigma);

  // -M_{sigma p}(arg) + ||arg||^2/(2 sigma), via the prox point
  Matrix arg = eval_shifted_argument(ap, dp, pd);
  Matrix P = prox_p(sigma, pd.reg, arg);
  val -= p_value(pd.reg, P) + (P - arg).squaredNorm() / (2.0 * sigma);
  val += arg.squaredNorm() / (2.0 * sigma);

  auto cone_terms = [sigma](ConeKind kind, const Vector& w) {
    // -M_{sigma delta_K}(w) + ||w||^2/(2 sigma)
    Vector pw = prox_cone(kind, sigma, w);
    return (w.squaredNorm() - (pw - w).squaredNorm()) / (2.0 * sigma);
  };
  val += cone_terms(cs.cone_r, anc.y + sigma * dp.u);
  val += cone_terms(cs.cone_c, anc.z + sigma * dp.v);

  const auto& ad = ap.anchor_dual;
  val += ap.tau / (2.0 * sigma) *
         ((dp.W - ad.W).squaredNorm() + (dp.u - ad.u).squaredNorm() + (dp.v - ad.v).squaredNorm());
  return val;
}

DualPoint grad_Psi(const ALParams& ap, const DualPoint& dp, const ProblemData& pd) {
  const double sigma = ap.sigma, ts = ap.tau / ap.sigma;
  const auto& cs = pd.constraints;

  Matrix P = prox_p(sigma, pd.reg, eval_shifted_argument(ap, dp, pd));
  Vector ys = prox_cone(cs.cone_r, sigma, ap.anchor_primal.y + sigma * dp.u);
  Vector zs = prox_cone(cs.cone_c, sigma, ap.anchor_primal.z + sigma * dp.v);

  DualPoint g;
  g.W = cs.has_coupling() ? Matrix(cs.A * P * cs.B - cs.S + ts * (dp.W - ap.anchor_dual.W))
                          : Matrix::Zero(0, 0);
  g.u = P.rowwise().sum() + ys - pd.alpha + ts * (dp.u - ap.anchor_dual.u);
  g.v = P.colwise().sum().transpose() + zs - pd.beta + ts * (dp.v - ap.anchor_dual.v);
  return g;
}

std::pair<DeltaTriple, PrimalPoint> delta_residuals(const ALParams& ap,
                                                    const DualPoint& dp_tilde,
                                                    const ProblemData& pd) {
  const double sigma = ap.sigma;
  const auto& cs = pd.constraints;

  PrimalPoint tilde;
  tilde.X = prox_p(sigma, pd.reg, eval_shifted_argument(ap, dp_tilde, pd));
  tilde.y = prox_cone(cs.cone_r, sigma, ap.anchor_primal.y + sigma * dp_tilde.u);
  tilde.z = prox_cone(cs.cone_c, sigma, ap.anchor_primal.z + sigma * dp_tilde.v);

  DeltaTriple dt;
  const double ts = ap.tau / ap.sigma;
  dt.delta.W = cs.has_coupling()
                   ? Matrix(cs.A * tilde.X * cs.B - cs.S +
                            ts * (dp_tilde.W - ap.anchor_dual.W))
                   : Matrix::Zero(0, 0);
  dt.delta.u = tilde.X.rowwise().sum() + tilde.y - pd.alpha + ts * (dp_tilde.u - ap.anchor_dual.u);
  dt.delta.v = tilde.X.colwise().sum().transpose() + tilde.z - pd.beta +
               ts * (dp_tilde.v - ap.anchor_dual.v);
  dt.delta_p = {tilde.X - ap.anchor_primal.X, tilde.y - ap.anchor_primal.y,
                tilde.z - ap.anchor_primal.z};
  dt.delta_d = dp_tilde - ap.anchor_dual;
  return {std::move(dt), std::move(tilde)};
}

ResidualReport kkt_residuals(const ProblemData& pd, const PrimalPoint& pt, const DualPoint& dp) {
  const auto& cs = pd.constraints;
  ResidualReport r;

  Matrix E = dp.u * Matrix::Ones(1, pd.n()) + Matrix::Ones(pd.m(), 1) * dp.v.transpose() - pd.C;
  if (cs.has_coupling()) E += cs.A.transpose() * dp.W * cs.B.transpose();
  r.eta_X = (pt.X - prox_p(1.0, pd.reg, pt.X + E)).norm() / (1.0 + pd.C.norm());
  r.eta_y = (pt.y - prox_cone(cs.cone_r, 1.0, pt.y + dp.u)).norm() /
            (1.0 + pt.y.norm() + dp.u.norm());
  r.eta_z = (pt.z - prox_cone(cs.cone_c, 1.0, pt.z + dp.v)).norm() /
            (1.0 + pt.z.norm() + dp.v.norm());
  r.eta_feas = unified_feasibility_violation(pd, pt) /
               (1.0 + pd.alpha.norm() + pd.beta.norm() + cs.S.norm());

  r.pobj = primal_objective(pd, pt);
  DualObjective d = dual_objective(pd, dp);
  r.dobj = d.value;
  r.domain_distance = d.domain_distance;
  r.eta_gap = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj) + std::abs(r.dobj));

  r.eta = std::max({r.eta_X, r.eta_y, r.eta_z, r.eta_feas, r.eta_gap});
  return r;
}

}  // namespace otpalm
