#include "otpalm/ssn.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace otpalm {

NewtonOperator::NewtonOperator(const ProblemData& pd, double sigma, double tau)
    : pd_(&pd), sigma_(sigma), tau_(tau), m_(pd.m()), n_(pd.n()),
      mt_(pd.constraints.mt()), nt_(pd.constraints.nt()) {
  Dmask = Matrix::Zero(m_, n_);
  theta_y = Vector::Zero(m_);
  theta_z = Vector::Zero(n_);
}

NewtonOperator assemble_operator(const ALParams& ap, const DualPoint& dp, const ProblemData& pd) {
  NewtonOperator H(pd, ap.sigma, ap.tau);
  const auto& reg = pd.reg;
  Matrix arg = eval_shifted_argument(ap, dp, pd);

  if (reg.lambda1 <= 0.0) {
    const double scale = 1.0 / (ap.sigma * reg.lambda2 + 1.0);
    H.Dmask = (arg.array() > 0.0).cast<double>() * scale;
  } else {
    const auto& part = reg.partition;
    for (std::size_t g = 0; g < part.groups.size(); ++g) {
      ProxParams pp{ap.sigma, reg.lambda1, reg.lambda2,
                    part.omega[static_cast<Eigen::Index>(g)]};
      Vector xG = detail::gather_group(part, g, arg);
      GroupJacobian J = jac_group(pp, xG);
      if (J.is_zero_map()) continue;
      double* d = H.Dmask.data();
      const auto& idx = part.flat[g];
      for (std::size_t t = 0; t < idx.size(); ++t)
        if (J.theta[t]) d[idx[t]] = J.scale * J.a;
      if (J.b != 0.0) {
        NewtonOperator::Spike sp;
        sp.coef = J.scale * J.b;
        for (std::size_t t = 0; t < idx.size(); ++t) {
          if (J.w[static_cast<Eigen::Index>(t)] != 0.0) {
            sp.idx.push_back(idx[t]);
            sp.val.push_back(J.w[static_cast<Eigen::Index>(t)]);
          }
        }
        H.spikes.push_back(std::move(sp));
      }
    }
  }

  const auto& cs = pd.constraints;
  if (cs.cone_r == ConeKind::NonnegOrthant) {
    Vector w = ap.anchor_primal.y + ap.sigma * dp.u;
    H.theta_y = (w.array() > 0.0).cast<double>();
  }
  if (cs.cone_c == ConeKind::NonnegOrthant) {
    Vector w = ap.anchor_primal.z + ap.sigma * dp.v;
    H.theta_z = (w.array() > 0.0).cast<double>();
  }
  return H;
}

DualPoint NewtonOperator::apply(const DualPoint& d) const {
  const auto& cs = pd_->constraints;
  Matrix E = d.u * Matrix::Ones(1, n_) + Matrix::Ones(m_, 1) * d.v.transpose();
  if (mt_ * nt_ > 0) E += cs.A.transpose() * d.W * cs.B.transpose();

  Matrix F = Dmask.cwiseProduct(E);
  const double* e = E.data();
  double* f = F.data();
  for (const auto& sp : spikes) {
    double dot = 0.0;
    for (std::size_t t = 0; t < sp.idx.size(); ++t) dot += sp.val[t] * e[sp.idx[t]];
    dot *= sp.coef;
    for (std::size_t t = 0; t < sp.idx.size(); ++t) f[sp.idx[t]] += dot * sp.val[t];
  }

  const double ts = tau_ / sigma_;
  DualPoint out;
  out.W = (mt_ * nt_ > 0) ? Matrix(sigma_ * (cs.A * F * cs.B) + ts * d.W) : Matrix::Zero(mt_, nt_);
  out.u = sigma_ * (F.rowwise().sum() + theta_y.cwiseProduct(d.u)) + ts * d.u;
  out.v = sigma_ * (F.colwise().sum().transpose() + theta_z.cwiseProduct(d.v)) + ts * d.v;
  return out;
}

Vector NewtonOperator::flatten(const DualPoint& d) const {
  Vector out(dim());
  if (mt_ * nt_ > 0)
    out.head(mt_ * nt_) = Eigen::Map<const Vector>(d.W.data(), mt_ * nt_);
  out.segment(mt_ * nt_, m_) = d.u;
  out.tail(n_) = d.v;
  return out;
}

DualPoint NewtonOperator::unflatten(const Vector& d) const {
  DualPoint out;
  out.W = (mt_ * nt_ > 0) ? Matrix(Eigen::Map<const Matrix>(d.data(), mt_, nt_))
                          : Matrix::Zero(mt_, nt_);
  out.u = d.segment(mt_ * nt_, m_);
  out.v = d.tail(n_);
  return out;
}

Vector NewtonOperator::apply_vec(const Vector& d) const { return flatten(apply(unflatten(d))); }

Matrix NewtonOperator::dense() const {
  const auto& cs = pd_->constraints;
  const int N = dim(), nw = mt_ * nt_;
  const double ts = tau_ / sigma_;
  Matrix H = Matrix::Zero(N, N);

  // u/v blocks from the entrywise mask
  Vector rowsum = Dmask.rowwise().sum(), colsum = Dmask.colwise().sum().transpose();
  for (int i = 0; i < m_; ++i) H(nw + i, nw + i) = sigma_ * (rowsum[i] + theta_y[i]) + ts;
  for (int j = 0; j < n_; ++j) H(nw + m_ + j, nw + m_ + j) = sigma_ * (colsum[j] + theta_z[j]) + ts;
  H.block(nw, nw + m_, m_, n_) = sigma_ * Dmask;
  H.block(nw + m_, nw, n_, m_) = sigma_ * Dmask.transpose();

  if (nw > 0) {
    // nonzero pattern of A's columns (one entry for identity/ones presets)
    std::vector<std::vector<int>> nzA(m_);
    for (int i = 0; i < m_; ++i)
      for (int s = 0; s < mt_; ++s)
        if (cs.A(s, i) != 0.0) nzA[i].push_back(s);

    Matrix DB = Dmask * cs.B;                   // m x nt
    Matrix AD = cs.A * Dmask;                   // mt x n
    auto widx = [&](int s, int t) { return s + t * mt_; };

    for (int i = 0; i < m_; ++i) {
      if (nzA[i].empty()) continue;
      Matrix Gi = cs.B.transpose() * Dmask.row(i).asDiagonal() * cs.B;  // nt x nt
      for (int s : nzA[i])
        for (int sp : nzA[i]) {
          const double c = sigma_ * cs.A(s, i) * cs.A(sp, i);
          for (int t = 0; t < nt_; ++t)
            for (int tp = 0; tp < nt_; ++tp) H(widx(s, t), widx(sp, tp)) += c * Gi(t, tp);
        }
      for (int s : nzA[i])
        for (int t = 0; t < nt_; ++t) {
          const double c = sigma_ * cs.A(s, i) * DB(i, t);
          H(widx(s, t), nw + i) += c;
          H(nw + i, widx(s, t)) += c;
        }
    }
    for (int j = 0; j < n_; ++j)
      for (int t = 0; t < nt_; ++t) {
        if (cs.B(j, t) == 0.0) continue;
        for (int s = 0; s < mt_; ++s) {
          const double c = sigma_ * AD(s, j) * cs.B(j, t);
          if (c == 0.0) continue;
          H(widx(s, t), nw + m_ + j) += c;
          H(nw + m_ + j, widx(s, t)) += c;
        }
      }
    for (int t = 0; t < nw; ++t) H(t, t) += ts;
  }

  for (const auto& sp : spikes) {
    Vector s = Vector::Zero(N);
    for (std::size_t t = 0; t < sp.idx.size(); ++t) {
      const int i = sp.idx[t] % m_, j = sp.idx[t] / m_;
      const double w = sp.val[t];
      s[nw + i] += w;
      s[nw + m_ + j] += w;
      if (nw > 0)
        for (int ss = 0; ss < mt_; ++ss) {
          if (cs.A(ss, i) == 0.0) continue;
          for (int tt = 0; tt < nt_; ++tt) s[ss + tt * mt_] += cs.A(ss, i) * cs.B(j, tt) * w;
        }
    }
    H.noalias() += (sigma_ * sp.coef) * s * s.transpose();
  }
  return H;
}

Vector NewtonOperator::diagonal() const {
  const auto& cs = pd_->constraints;
  const int N = dim(), nw = mt_ * nt_;
  const double ts = tau_ / sigma_;
  Vector d = Vector::Constant(N, ts);

  Vector rowsum = Dmask.rowwise().sum(), colsum = Dmask.colwise().sum().transpose();
  d.segment(nw, m_) += sigma_ * (rowsum + theta_y);
  d.tail(n_) += sigma_ * (colsum + theta_z);

  if (nw > 0) {
    Matrix A2 = cs.A.cwiseAbs2(), B2 = cs.B.cwiseAbs2();  // mt x m, n x nt
    Matrix Wdiag = A2 * Dmask * B2;                       // mt x nt
    d.head(nw) += sigma_ * Eigen::Map<const Vector>(Wdiag.data(), nw);
  }
  for (const auto& sp : spikes) {
    Vector s = Vector::Zero(N);
    for (std::size_t t = 0; t < sp.idx.size(); ++t) {
      const int i = sp.idx[t] % m_, j = sp.idx[t] / m_;
      s[nw + i] += sp.val[t];
      s[nw + m_ + j] += sp.val[t];
      if (nw > 0)
        for (int ss = 0; ss < mt_; ++ss) {
          if (cs.A(ss, i) == 0.0) continue;
          for (int tt = 0; tt < nt_; ++tt)
            s[ss + tt * mt_] += cs.A(ss, i) * cs.B(j, tt) * sp.val[t];
        }
    }
    d += (sigma_ * sp.coef) * s.cwiseAbs2();
  }
  return d;
}

namespace {

// Jacobi-preconditioned CG on the matrix-free operator; stops on the true
// residual ||H d - b||.
LinSolveResult pcg_solve(const NewtonOperator& H, const Vector& b, double tol, int max_iters) {
  LinSolveResult res;
  res.used_cg = true;
  Vector prec = H.diagonal().cwiseMax(1e-30).cwiseInverse();
  Vector x = Vector::Zero(b.size());
  Vector r = b;
  Vector z = prec.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  double best_res = r.norm();
  Vector best_x = x;

  int it = 0;
  for (; it < max_iters; ++it) {
    if (best_res <= tol) break;
    Vector Hp = H.apply_vec(p);
    const double pHp = p.dot(Hp);
    if (pHp <= 0.0) break;  // not expected for an SPD operator
    const double a = rz / pHp;
    x += a * p;
    r -= a * Hp;
    const double rn = r.norm();
    if (rn < best_res) {
      best_res = rn;
      best_x = x;
    }
    z = prec.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  res.cg_iters = it;
  res.cg_stalled = best_res > tol;
  res.achieved_residual = best_res;
  res.d = H.unflatten(best_x);
  return res;
}

}  // namespace

LinSolveResult solve_newton_system(const NewtonOperator& H, const DualPoint& g,
                                   const SsnConfig& cfg) {
  Vector b = -H.flatten(g);
  const double gn = b.norm();
  const double tol = std::min(cfg.eta_bar, std::pow(gn, 1.0 + cfg.gamma));

  if (H.dim() <= cfg.dense_threshold) {
    Matrix Hd = H.dense();
    Eigen::LLT<Matrix> llt(Hd);
    if (llt.info() == Eigen::Success) {
      LinSolveResult res;
      Vector x = llt.solve(b);
      double resid = (Hd * x - b).norm();
      if (resid > tol) {  // one refinement pass against rounding on stiff systems
        x += llt.solve(b - Hd * x);
        resid = (Hd * x - b).norm();
      }
      res.d = H.unflatten(x);
      res.achieved_residual = resid;
      if (resid <= std::max(tol, 1e-9 * (1.0 + gn))) return res;
      // genuinely failed factorization accuracy: fall through to CG
    }
  }
  return pcg_solve(H, b, tol, cfg.max_cg_iters);
}

std::pair<double, DualPoint> line_search(const ALParams& ap, const DualPoint& dp,
                                         const DualPoint& grad, const DualPoint& dir,
                                         const SsnConfig& cfg, const ProblemData& pd,
                                         double psi0, int* backtracks) {
  const double gd = dot(grad, dir);
  if (gd >= 0.0)
    throw NonDescentDirection("line_search: direction is not a descent direction");
  double alpha = 1.0;
  for (int i = 0; i <= cfg.max_backtracks; ++i) {
    DualPoint trial = dp + alpha * dir;
    if (eval_Psi(ap, trial, pd) <= psi0 + cfg.mu * alpha * gd) {
      if (backtracks) *backtracks += i;
      return {alpha, std::move(trial)};
    }
    alpha *= cfg.delta;
  }
  throw MaxBacktracks("line_search: Armijo condition not met within the backtrack budget");
}

std::pair<DualPoint, SsnStats> ssn_solve(const ALParams& ap, const DualPoint& dp0,
                                         const ProblemData& pd, const SsnConfig& cfg,
                                         const std::function<bool(const DeltaTriple&)>& stop) {
  SsnStats stats;
  DualPoint dp = dp0;
  auto [dt, tilde] = delta_residuals(ap, dp, pd);
  stats.grad_norms.push_back(dt.delta.norm());
  if (stop(dt)) return {std::move(dp), std::move(stats)};

  const double grad_floor = 1e-15 * (1.0 + ap.anchor_primal.norm() + ap.anchor_dual.norm());
  for (int j = 0; j < cfg.max_inner_iters; ++j) {
    NewtonOperator H = assemble_operator(ap, dp, pd);
    LinSolveResult lin = solve_newton_system(H, dt.delta, cfg);
    stats.linear_systems += 1;
    stats.cg_iterations += lin.cg_iters;

    const double psi0 = eval_Psi(ap, dp, pd);
    try {
      auto [alpha, next] = line_search(ap, dp, dt.delta, lin.d, cfg, pd, psi0, &stats.backtracks);
      (void)alpha;
      dp = std::move(next);
    } catch (const MaxBacktracks&) {
      stats.line_search_bailout = true;
      break;
    }
    stats.iterations += 1;

    std::tie(dt, tilde) = delta_residuals(ap, dp, pd);
    stats.grad_norms.push_back(dt.delta.norm());
    if (stop(dt)) return {std::move(dp), std::move(stats)};
    if (dt.delta.norm() <= grad_floor) break;  // at numerical stationarity
  }
  stats.hit_max_iters = stats.iterations >= cfg.max_inner_iters;
  return {std::move(dp), std::move(stats)};
}

}  // namespace otpalm
