#include "otpalm/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "otpalm/admm.hpp"

namespace otpalm {

namespace {

// Huber-smoothed Euclidean norm and gradient: quadratic inside the eps-ball
// (offset by eps/2 so the two branches join continuously).
double smooth_norm(const Vector& z, double eps, Vector* grad) {
  const double nz = z.norm();
  if (nz == 0.0) {
    if (grad) grad->setZero(z.size());
    return 0.5 * eps;
  }
  if (nz >= eps) {
    if (grad) *grad = z / nz;
    return nz;
  }
  if (grad) *grad = z / eps;
  return 0.5 * nz * nz / eps + 0.5 * eps;
}

double prox_objective(const ProxParams& pp, const Vector& x, const Vector& z) {
  return pp.lambda1 * pp.omega * z.norm() + 0.5 * pp.lambda2 * z.squaredNorm() +
         (z - x).squaredNorm() / (2.0 * pp.sigma);
}

}  // namespace

Vector prox_oracle(const ProxParams& pp, const Vector& x, const OracleConfig& cfg) {
  const double l1w = pp.lambda1 * pp.omega;
  long budget = cfg.max_iters;

  auto stage = [&](Vector z, double eps, double gtol) {
    // projected FISTA with backtracking on the smoothed objective
    auto feval = [&](const Vector& w, Vector* grad) {
      Vector gn;
      const double sn = smooth_norm(w, eps, grad ? &gn : nullptr);
      double val = l1w * sn + 0.5 * pp.lambda2 * w.squaredNorm() +
                   (w - x).squaredNorm() / (2.0 * pp.sigma);
      if (grad) *grad = l1w * gn + pp.lambda2 * w + (w - x) / pp.sigma;
      return val;
    };
    double L = pp.lambda2 + 1.0 / pp.sigma + (eps > 0 ? l1w / eps : 0.0);
    double t = 1.0;
    Vector zp = z, yk = z;
    Vector g(z.size());
    double fz = feval(z, nullptr);
    while (budget-- > 0) {
      const double fy = feval(yk, &g);
      Vector znew = (yk - g / L).cwiseMax(0.0);
      double fnew = feval(znew, nullptr);
      // backtracking on the majorization at yk
      int bt = 0;
      while (fnew > fy + g.dot(znew - yk) + 0.5 * L * (znew - yk).squaredNorm() + 1e-16 &&
             bt++ < 60) {
        L *= 2.0;
        znew = (yk - g / L).cwiseMax(0.0);
        fnew = feval(znew, nullptr);
      }
      const double tnew = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      Vector ynew = znew + ((t - 1.0) / tnew) * (znew - zp);
      if (fnew > fz) {  // monotone restart
        ynew = znew;
        t = 1.0;
      } else {
        t = tnew;
      }
      const double move = (znew - z).norm() * L;
      zp = z;
      z = znew;
      fz = std::min(fz, fnew);
      yk = ynew;
      L = std::max(L * 0.9, pp.lambda2 + 1.0 / pp.sigma + 1e-12);
      if (move <= gtol) break;
    }
    return z;
  };

  Vector z = x.cwiseMax(0.0);
  if (l1w > 0.0) {
    for (double eps : {1e-2, 1e-4, 1e-6}) z = stage(std::move(z), eps, 1e-10 * (1.0 + x.norm()));

    // polish on the exact objective; smooth wherever ||z|| > 0. Fixed-step
    // projected gradient driven by the gradient map (objective comparisons
    // would floor at sqrt-of-roundoff distance).
    const double gtol = 1e-13 * (1.0 + x.norm());
    double step_scale = 0.9;
    double best_gmap = std::numeric_limits<double>::infinity();
    while (budget-- > 0 && z.norm() > 1e-300) {
      Vector g = l1w * z / z.norm() + pp.lambda2 * z + (z - x) / pp.sigma;
      const double t = step_scale / (pp.lambda2 + 1.0 / pp.sigma + l1w / z.norm());
      Vector zn = (z - t * g).cwiseMax(0.0);
      const double gmap = (zn - z).norm() / t;
      if (gmap <= gtol) {
        z = std::move(zn);
        break;
      }
      if (gmap > 2.0 * best_gmap) {  // local curvature bound was optimistic
        step_scale *= 0.5;
        if (step_scale < 1e-6) break;
        continue;
      }
      best_gmap = std::min(best_gmap, gmap);
      z = std::move(zn);
    }
    // exact-objective decision between the polished point and the origin
    if (prox_objective(pp, x, Vector::Zero(x.size())) <= prox_objective(pp, x, z))
      z = Vector::Zero(x.size());
  } else {
    z = stage(std::move(z), 0.0, 1e-13 * (1.0 + x.norm()));
  }
  return z;
}

namespace {

struct StandardForm {
  Matrix E;
  Vector b;
  Vector cost;
  int nx;            // leading X variables (column-major)
  bool has_y, has_z;
};

StandardForm build_standard_form(const ProblemData& pd) {
  const int m = pd.m(), n = pd.n();
  const auto& cs = pd.constraints;
  const int mt = cs.mt(), nt = cs.nt();
  StandardForm sf;
  sf.has_y = cs.cone_r == ConeKind::NonnegOrthant;
  sf.has_z = cs.cone_c == ConeKind::NonnegOrthant;
  sf.nx = m * n;
  const int nv = sf.nx + (sf.has_y ? m : 0) + (sf.has_z ? n : 0);
  const int rows = mt * nt + m + n;
  sf.E = Matrix::Zero(rows, nv);
  sf.b = Vector::Zero(rows);
  sf.cost = Vector::Zero(nv);

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      const int col = i + j * m;
      sf.cost[col] = pd.C(i, j);
      for (int s = 0; s < mt; ++s)
        for (int t = 0; t < nt; ++t)
          if (cs.A(s, i) * cs.B(j, t) != 0.0)
            sf.E(s + t * mt, col) = cs.A(s, i) * cs.B(j, t);
      sf.E(mt * nt + i, col) = 1.0;
      sf.E(mt * nt + m + j, col) = 1.0;
    }
  for (int s = 0; s < mt; ++s)
    for (int t = 0; t < nt; ++t) sf.b[s + t * mt] = cs.S(s, t);
  sf.b.segment(mt * nt, m) = pd.alpha;
  sf.b.tail(n) = pd.beta;
  if (sf.has_y)
    for (int i = 0; i < m; ++i) sf.E(mt * nt + i, sf.nx + i) = 1.0;
  if (sf.has_z) {
    const int off = sf.nx + (sf.has_y ? m : 0);
    for (int j = 0; j < n; ++j) sf.E(mt * nt + m + j, off + j) = 1.0;
  }
  return sf;
}

bool lex_less_rowmajor(const Matrix& A, const Matrix& B, double tol) {
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const double d = A(i, j) - B(i, j);
      if (d < -tol) return true;
      if (d > tol) return false;
    }
  return false;
}

double binomial_guard(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) {
    v *= double(n - i) / double(i + 1);
    if (v > 1e17) return v;
  }
  return v;
}

}  // namespace

LpSolution lp_oracle(const ProblemData& pd, const OracleConfig& cfg) {
  const int m = pd.m(), n = pd.n();
  StandardForm sf = build_standard_form(pd);
  const int nv = static_cast<int>(sf.E.cols());

  Eigen::ColPivHouseholderQR<Matrix> qr(sf.E);
  qr.setThreshold(1e-10);
  const int r = static_cast<int>(qr.rank());

  if (binomial_guard(nv, r) > 2e7) {
    // TooLarge: fall back to a long dual ADMM run
    AdmmConfig ac;
    ac.tol = cfg.tol;
    ac.max_iter = 200000;
    WarmStartResult ws = warm_start(pd, ac);
    LpSolution sol;
    sol.X = ws.primal.X;
    sol.y = ws.primal.y;
    sol.z = ws.primal.z;
    sol.objective = pd.C.cwiseProduct(sol.X).sum();
    sol.exact = false;
    return sol;
  }

  const double feas_tol = 1e-9 * (1.0 + sf.b.norm());
  double best_obj = std::numeric_limits<double>::infinity();
  Vector best_x;
  bool found = false;

  std::vector<int> combo(r);
  for (int i = 0; i < r; ++i) combo[i] = i;
  Matrix EB(sf.E.rows(), r);
  while (true) {
    for (int i = 0; i < r; ++i) EB.col(i) = sf.E.col(combo[i]);
    Eigen::ColPivHouseholderQR<Matrix> qb(EB);
    qb.setThreshold(1e-10);
    if (static_cast<int>(qb.rank()) == r) {
      Vector xb = qb.solve(sf.b);
      if ((EB * xb - sf.b).norm() <= feas_tol && (xb.array() >= -1e-9).all()) {
        double obj = 0.0;
        for (int i = 0; i < r; ++i) obj += sf.cost[combo[i]] * xb[i];
        Vector full = Vector::Zero(nv);
        for (int i = 0; i < r; ++i) full[combo[i]] = std::max(xb[i], 0.0);
        if (!found || obj < best_obj - 1e-9 * (1.0 + std::abs(best_obj))) {
          best_obj = obj;
          best_x = full;
          found = true;
        } else if (obj <= best_obj + 1e-9 * (1.0 + std::abs(best_obj))) {
          Matrix Xa = Eigen::Map<const Matrix>(full.data(), m, n);
          Matrix Xb = Eigen::Map<const Matrix>(best_x.data(), m, n);
          if (lex_less_rowmajor(Xa, Xb, 1e-12)) best_x = full;
        }
      }
    }
    // next combination
    int i = r - 1;
    while (i >= 0 && combo[i] == nv - r + i) --i;
    if (i < 0) break;
    ++combo[i];
    for (int k = i + 1; k < r; ++k) combo[k] = combo[k - 1] + 1;
  }

  if (!found) throw std::runtime_error("Infeasible: LP has no basic feasible solution");
  LpSolution sol;
  sol.X = Eigen::Map<const Matrix>(best_x.data(), m, n);
  sol.y = sf.has_y ? Vector(best_x.segment(sf.nx, m)) : Vector::Zero(m);
  sol.z = sf.has_z ? Vector(best_x.tail(n)) : Vector::Zero(n);
  sol.objective = best_obj;
  return sol;
}

namespace {

// Dykstra's alternating projection onto the intersection of simple pieces.
class FeasibleProjector {
 public:
  explicit FeasibleProjector(const ProblemData& pd) : pd_(&pd) {
    const auto& cs = pd.constraints;
    if (cs.preset == PresetKind::Martingale || cs.preset == PresetKind::Custom) {
      if (cs.has_coupling()) {
        if (cs.preset == PresetKind::Martingale) {
          qtq_ = (cs.B.transpose() * cs.B).ldlt();
          use_rowwise_coupling_ = true;
        } else {
          const int mn = pd.m() * pd.n();
          K_ = Matrix::Zero(cs.mt() * cs.nt(), mn);
          for (int j = 0; j < pd.n(); ++j)
            for (int i = 0; i < pd.m(); ++i)
              for (int s = 0; s < cs.mt(); ++s)
                for (int t = 0; t < cs.nt(); ++t)
                  K_(s + t * cs.mt(), i + j * pd.m()) = cs.A(s, i) * cs.B(j, t);
          kkt_.compute(K_ * K_.transpose());
        }
      }
    }
  }

  int pieces() const {
    const auto& cs = pd_->constraints;
    int p = 3;  // rows, cols, orthant
    if (cs.has_coupling()) p += 1;
    return p;
  }

  void project_piece(int which, Matrix& X) const {
    const auto& cs = pd_->constraints;
    const int m = pd_->m(), n = pd_->n();
    switch (which) {
      case 0: {  // row marginals
        Vector rs = X.rowwise().sum();
        if (cs.cone_r == ConeKind::Zero) {
          X += ((pd_->alpha - rs) / n) * Matrix::Ones(1, n);
        } else {  // X 1 <= alpha halfspaces
          for (int i = 0; i < m; ++i)
            if (rs[i] > pd_->alpha[i])
              X.row(i).array() += (pd_->alpha[i] - rs[i]) / n;
        }
        break;
      }
      case 1: {  // column marginals
        Vector csum = X.colwise().sum().transpose();
        if (cs.cone_c == ConeKind::Zero) {
          X += Matrix::Ones(m, 1) * ((pd_->beta - csum) / m).transpose();
        } else {
          for (int j = 0; j < n; ++j)
            if (csum[j] > pd_->beta[j])
              X.col(j).array() += (pd_->beta[j] - csum[j]) / m;
        }
        break;
      }
      case 2:
        X = X.cwiseMax(0.0);
        break;
      default: {  // coupling AXB = S
        if (cs.preset == PresetKind::Partial) {
          const double total = X.sum();
          X.array() += (cs.partial_mass - total) / (m * n);
        } else if (use_rowwise_coupling_) {
          // rows decouple: x_i += Q (Q^T Q)^{-1} (s_i - Q^T x_i)
          Matrix R = cs.S - X * cs.B;
          X += qtq_.solve(R.transpose()).transpose() * cs.B.transpose();
        } else {
          Vector vx = Eigen::Map<const Vector>(X.data(), X.size());
          Vector vs = Eigen::Map<const Vector>(cs.S.data(), cs.S.size());
          Vector vnew = vx + K_.transpose() * kkt_.solve(vs - K_ * vx);
          X = Eigen::Map<const Matrix>(vnew.data(), m, n);
        }
        break;
      }
    }
  }

  Matrix project(Matrix X, double tol = 1e-13, int max_passes = 300) const {
    const int p = pieces();
    std::vector<Matrix> corr(static_cast<std::size_t>(p),
                             Matrix::Zero(X.rows(), X.cols()));
    for (int pass = 0; pass < max_passes; ++pass) {
      double moved = 0.0;
      for (int s = 0; s < p; ++s) {
        Matrix before = X + corr[static_cast<std::size_t>(s)];
        Matrix projected = before;
        project_piece(s, projected);
        corr[static_cast<std::size_t>(s)] = before - projected;
        moved = std::max(moved, (projected - X).norm());
        X = std::move(projected);
      }
      if (moved <= tol * (1.0 + X.norm())) break;
    }
    return X;
  }

 private:
  const ProblemData* pd_;
  bool use_rowwise_coupling_ = false;
  Eigen::LDLT<Matrix> qtq_;
  Matrix K_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> kkt_;
};

}  // namespace

RegSolution reg_oracle(const ProblemData& pd, const OracleConfig& cfg) {
  if (!(pd.reg.lambda2 > 0))
    throw std::invalid_argument("reg_oracle: requires lambda2 > 0");
  const auto& part = pd.reg.partition;
  FeasibleProjector proj(pd);
  long budget = cfg.max_iters;

  auto feval = [&](const Matrix& X, double eps, Matrix* grad) {
    double val = pd.C.cwiseProduct(X).sum() + 0.5 * pd.reg.lambda2 * X.squaredNorm();
    if (grad) *grad = pd.C + pd.reg.lambda2 * X;
    if (pd.reg.lambda1 > 0) {
      for (std::size_t g = 0; g < part.groups.size(); ++g) {
        Vector xg = detail::gather_group(part, g, X);
        Vector gn;
        const double w = pd.reg.lambda1 * part.omega[static_cast<Eigen::Index>(g)];
        val += w * smooth_norm(xg, eps, grad ? &gn : nullptr);
        if (grad) {
          Vector cur = detail::gather_group(part, g, *grad);
          detail::scatter_group(part, g, Vector(cur + w * gn), *grad);
        }
      }
    }
    return val;
  };

  Matrix X = proj.project(Matrix::Zero(pd.m(), pd.n()));
  std::vector<double> eps_stages =
      pd.reg.lambda1 > 0 ? std::vector<double>{1e-3, 1e-5, 1e-7, 1e-9}
                         : std::vector<double>{0.0};

  for (double eps : eps_stages) {
    double L = pd.reg.lambda2 + (eps > 0 ? pd.reg.lambda1 * part.omega.maxCoeff() / eps : 0.0) +
               1e-12;
    double t = 1.0;
    Matrix Y = X, Xp = X, G(pd.m(), pd.n());
    double fbest = feval(X, eps, nullptr);
    int stall = 0;
    while (budget-- > 0) {
      const double fy = feval(Y, eps, &G);
      Matrix Xn = proj.project(Y - G / L);
      double fn = feval(Xn, eps, nullptr);
      int bt = 0;
      while (fn > fy + G.cwiseProduct(Xn - Y).sum() + 0.5 * L * (Xn - Y).squaredNorm() + 1e-16 &&
             bt++ < 60) {
        L *= 2.0;
        Xn = proj.project(Y - G / L);
        fn = feval(Xn, eps, nullptr);
      }
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      Matrix Yn = Xn + ((t - 1.0) / tn) * (Xn - Xp);
      if (fn > fbest) {
        Yn = Xn;
        t = 1.0;
      } else {
        t = tn;
      }
      if (std::abs(fbest - fn) <= 1e-10 * (1.0 + std::abs(fn))) {
        if (++stall >= 5) { X = Xn; break; }
      } else {
        stall = 0;
      }
      fbest = std::min(fbest, fn);
      Xp = X;
      X = Xn;
      Y = Yn;
      L = std::max(L * 0.9, pd.reg.lambda2);
    }
  }

  X = proj.project(std::move(X), 1e-14, 2000);
  RegSolution sol;
  sol.objective = primal_objective(pd, {X, Vector::Zero(pd.m()), Vector::Zero(pd.n())});
  sol.X = std::move(X);
  return sol;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  Vector fx = f(x);
  Matrix J(fx.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    Vector fp = f(xp);
    xp[j] = x[j] - h;
    Vector fm = f(xp);
    xp[j] = x[j];
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

}  // namespace otpalm
