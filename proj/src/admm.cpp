#include "otpalm/admm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "otpalm/prox.hpp"
#include "otpalm/ssn.hpp"

namespace otpalm {

struct AdmmWorkspace {
  double sigma = 1.0;
  bool dense = true;
  Eigen::LDLT<Matrix> joint;  // dADMM step-1 factorization
  // dSGSADMM sweep data
  Matrix Ua;  // eigenvectors of A A^T
  Vector la;
  Matrix Vb;  // eigenvectors of B^T B
  Vector lb;
  Vector A1;   // A 1_m
  Vector Bt1;  // B^T 1_n
};

namespace {

// Step-1 quadratic operator: the Newton operator with an all-ones mask,
// identity cone blocks and no proximal term.
NewtonOperator joint_operator(const ProblemData& pd, double sigma) {
  NewtonOperator op(pd, sigma, 0.0);
  op.Dmask = Matrix::Ones(pd.m(), pd.n());
  op.theta_y = Vector::Ones(pd.m());
  op.theta_z = Vector::Ones(pd.n());
  return op;
}

std::shared_ptr<const AdmmWorkspace> build_workspace(const ProblemData& pd, double sigma,
                                                     bool joint, int dense_threshold) {
  auto ws = std::make_shared<AdmmWorkspace>();
  ws->sigma = sigma;
  const auto& cs = pd.constraints;
  if (joint) {
    NewtonOperator op = joint_operator(pd, sigma);
    ws->dense = op.dim() <= dense_threshold;
    if (ws->dense) ws->joint.compute(op.dense());
  } else {
    if (cs.has_coupling()) {
      Eigen::SelfAdjointEigenSolver<Matrix> ea(cs.A * cs.A.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> eb(cs.B.transpose() * cs.B);
      ws->Ua = ea.eigenvectors();
      ws->la = ea.eigenvalues();
      ws->Vb = eb.eigenvectors();
      ws->lb = eb.eigenvalues();
      ws->A1 = cs.A * Vector::Ones(pd.m());
      ws->Bt1 = cs.B.transpose() * Vector::Ones(pd.n());
    }
  }
  return ws;
}

Matrix dual_combination(const DualPoint& dp, const ProblemData& pd) {
  Matrix E = dp.u * Matrix::Ones(1, pd.n()) + Matrix::Ones(pd.m(), 1) * dp.v.transpose();
  if (pd.constraints.has_coupling())
    E += pd.constraints.A.transpose() * dp.W * pd.constraints.B.transpose();
  return E;
}

// Closed-form (Xi, zeta, xi) block through the Moreau identity
// prox_{f*/sigma}(x) = x - prox_{sigma f}(sigma x)/sigma with f in {p, p_r, p_c}.
void solve_aux_block(AdmmState& st, const DualPoint& dp, const ProblemData& pd) {
  const double sigma = st.sigma;
  Matrix N = dual_combination(dp, pd) - pd.C;
  Matrix P = prox_p(sigma, pd.reg, st.mult.X + sigma * N);
  st.Xi = P / sigma - N - st.mult.X / sigma;
  Vector py = prox_cone(pd.constraints.cone_r, sigma, st.mult.y + sigma * dp.u);
  st.zeta = py / sigma - dp.u - st.mult.y / sigma;
  Vector pz = prox_cone(pd.constraints.cone_c, sigma, st.mult.z + sigma * dp.v);
  st.xi = pz / sigma - dp.v - st.mult.z / sigma;
}

void multiplier_update(AdmmState& st, const ProblemData& pd) {
  const double step = st.gamma * st.sigma;
  Matrix R = dual_combination(st.dual, pd) - pd.C + st.Xi;
  st.mult.X += step * R;
  st.mult.y += step * (st.dual.u + st.zeta);
  st.mult.z += step * (st.dual.v + st.xi);
}

DualPoint joint_rhs(const AdmmState& st, const ProblemData& pd) {
  const auto& cs = pd.constraints;
  Matrix G = st.mult.X + st.sigma * (st.Xi - pd.C);
  DualPoint b;
  b.W = cs.has_coupling() ? Matrix(cs.S - cs.A * G * cs.B) : Matrix::Zero(0, 0);
  b.u = pd.alpha - st.mult.y - st.sigma * st.zeta - G.rowwise().sum();
  b.v = pd.beta - st.mult.z - st.sigma * st.xi - G.colwise().sum().transpose();
  return b;
}

// sigma (A A^T) W (B^T B) = RHS, solved through the cached eigendecompositions.
Matrix sylvester_solve(const AdmmWorkspace& ws, const Matrix& rhs, double sigma) {
  Matrix T = ws.Ua.transpose() * rhs * ws.Vb;
  for (Eigen::Index s = 0; s < T.rows(); ++s)
    for (Eigen::Index t = 0; t < T.cols(); ++t) {
      const double d = sigma * ws.la[s] * ws.lb[t];
      T(s, t) = d > 1e-14 ? T(s, t) / d : 0.0;
    }
  return ws.Ua * T * ws.Vb.transpose();
}

void sweep_W(AdmmState& st, const ProblemData& pd) {
  const auto& cs = pd.constraints;
  if (!cs.has_coupling()) return;
  Matrix E0 = st.dual.u * Matrix::Ones(1, pd.n()) +
              Matrix::Ones(pd.m(), 1) * st.dual.v.transpose();
  Matrix rhs = cs.S - cs.A * (st.mult.X + st.sigma * (E0 + st.Xi - pd.C)) * cs.B;
  st.dual.W = sylvester_solve(*st.ws, rhs, st.sigma);
}

void sweep_u(AdmmState& st, const ProblemData& pd) {
  const auto& cs = pd.constraints;
  Matrix E0 = Matrix::Ones(pd.m(), 1) * st.dual.v.transpose();
  if (cs.has_coupling()) E0 += cs.A.transpose() * st.dual.W * cs.B.transpose();
  Vector rhs = pd.alpha - st.mult.y - st.sigma * st.zeta -
               (st.mult.X + st.sigma * (E0 + st.Xi - pd.C)).rowwise().sum();
  st.dual.u = rhs / (st.sigma * (pd.n() + 1.0));
}

void sweep_v(AdmmState& st, const ProblemData& pd) {
  const auto& cs = pd.constraints;
  Matrix E0 = st.dual.u * Matrix::Ones(1, pd.n());
  if (cs.has_coupling()) E0 += cs.A.transpose() * st.dual.W * cs.B.transpose();
  Vector rhs = pd.beta - st.mult.z - st.sigma * st.xi -
               (st.mult.X + st.sigma * (E0 + st.Xi - pd.C)).colwise().sum().transpose();
  st.dual.v = rhs / (st.sigma * (pd.m() + 1.0));
}

}  // namespace

AdmmState AdmmState::init(const ProblemData& pd, const AdmmConfig& cfg) {
  AdmmState st;
  st.dual = DualPoint::zero(pd);
  st.Xi = Matrix::Zero(pd.m(), pd.n());
  st.zeta = Vector::Zero(pd.m());
  st.xi = Vector::Zero(pd.n());
  st.mult = PrimalPoint::zero(pd);
  st.sigma = cfg.sigma;
  st.gamma = cfg.gamma > 0 ? cfg.gamma
                           : (cfg.variant == AdmmConfig::Variant::dADMM ? 1.618 : 1.95);
  st.ws = build_workspace(pd, st.sigma, cfg.variant == AdmmConfig::Variant::dADMM,
                          cfg.dense_threshold);
  return st;
}

AdmmState dadmm_step(const AdmmState& state, const ProblemData& pd) {
  AdmmState st = state;
  if (!st.ws || st.ws->sigma != st.sigma) st.ws = build_workspace(pd, st.sigma, true, 4000);

  NewtonOperator op = joint_operator(pd, st.sigma);
  DualPoint b = joint_rhs(st, pd);
  Vector bf = op.flatten(b);
  if (st.ws->dense) {
    Vector x = st.ws->joint.solve(bf);
    if ((op.apply_vec(x) - bf).norm() > 1e-8 * (1.0 + bf.norm()))
      throw std::runtime_error("LinearSolveFailure: ADMM joint system solve is inaccurate");
    st.dual = op.unflatten(x);
  } else {
    // Jacobi-preconditioned CG on the matrix-free operator
    SsnConfig cg;
    cg.dense_threshold = 0;
    cg.eta_bar = 1e-10;
    cg.gamma = 1.0;
    cg.max_cg_iters = 2000;
    DualPoint minus_b{-b.W, -b.u, -b.v};
    LinSolveResult r = solve_newton_system(op, minus_b, cg);
    st.dual = r.d;
  }

  solve_aux_block(st, st.dual, pd);
  multiplier_update(st, pd);
  st.iter += 1;
  return st;
}

AdmmState dsgsadmm_step(const AdmmState& state, const ProblemData& pd) {
  AdmmState st = state;
  if (!st.ws || st.ws->sigma != st.sigma) st.ws = build_workspace(pd, st.sigma, false, 4000);

  sweep_W(st, pd);
  sweep_u(st, pd);
  sweep_v(st, pd);
  solve_aux_block(st, st.dual, pd);
  sweep_v(st, pd);
  sweep_u(st, pd);
  sweep_W(st, pd);
  multiplier_update(st, pd);
  st.iter += 1;
  return st;
}

WarmStartResult warm_start(const ProblemData& pd, const AdmmConfig& cfg,
                           const ResidualFn& residual) {
  AdmmState st = AdmmState::init(pd, cfg);
  auto eta_at = [&](const AdmmState& s) {
    if (residual) return residual(s.mult, s.dual);
    return kkt_residuals(pd, s.mult, s.dual).eta;
  };
  WarmStartResult out;
  out.final_eta = eta_at(st);
  if (out.final_eta <= cfg.tol) {
    out.dual = st.dual;
    out.primal = st.mult;
    return out;
  }

  Matrix prev_Xi = st.Xi;
  Vector prev_zeta = st.zeta, prev_xi = st.xi;
  for (int k = 0; k < cfg.max_iter; ++k) {
    st = cfg.variant == AdmmConfig::Variant::dADMM ? dadmm_step(st, pd)
                                                   : dsgsadmm_step(st, pd);
    out.iterations = k + 1;
    out.final_eta = eta_at(st);
    if (out.final_eta <= cfg.tol) break;

    if (cfg.adapt_sigma && (k + 1) % 20 == 0) {
      const double rp = std::sqrt(
          (dual_combination(st.dual, pd) - pd.C + st.Xi).squaredNorm() +
          (st.dual.u + st.zeta).squaredNorm() + (st.dual.v + st.xi).squaredNorm());
      const double rd =
          st.sigma * std::sqrt((st.Xi - prev_Xi).squaredNorm() +
                               (st.zeta - prev_zeta).squaredNorm() +
                               (st.xi - prev_xi).squaredNorm());
      if (rp > 10.0 * rd)
        st.sigma = std::min(st.sigma * 2.0, 1e4);
      else if (rd > 10.0 * rp)
        st.sigma = std::max(st.sigma / 2.0, 1e-4);
    }
    prev_Xi = st.Xi;
    prev_zeta = st.zeta;
    prev_xi = st.xi;
  }
  out.dual = st.dual;
  out.primal = st.mult;
  return out;
}

}  // namespace otpalm
