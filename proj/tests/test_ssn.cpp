#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "otpalm/oracle.hpp"
#include "otpalm/ssn.hpp"
#include "test_util.hpp"

using namespace otpalm;

namespace {

ALParams random_params(const ProblemData& pd, double sigma = 1.0, double tau = 1.0) {
  ALParams ap;
  ap.sigma = sigma;
  ap.tau = tau;
  ap.anchor_primal = {test::rand_mat(pd.m(), pd.n(), -1, 1), test::rand_vec(pd.m()),
                      test::rand_vec(pd.n())};
  ap.anchor_dual = {test::rand_mat(pd.constraints.mt(), pd.constraints.nt()),
                    test::rand_vec(pd.m()), test::rand_vec(pd.n())};
  return ap;
}

DualPoint random_dual(const ProblemData& pd) {
  return {test::rand_mat(pd.constraints.mt(), pd.constraints.nt()), test::rand_vec(pd.m()),
          test::rand_vec(pd.n())};
}

}  // namespace

TEST_CASE("all-zero mask gives H = (tau/sigma) I") {
  ProblemData pd = test::small_classical(3, 3);
  ALParams ap = random_params(pd, 1.0, 2.5);
  ap.anchor_primal.X = Matrix::Constant(3, 3, -50.0);  // argument strictly negative
  DualPoint dp = DualPoint::zero(pd);
  NewtonOperator H = assemble_operator(ap, dp, pd);
  Matrix dense = H.dense();
  CHECK((dense - (ap.tau / ap.sigma) * Matrix::Identity(6, 6)).norm() <= 1e-13);
}

TEST_CASE("classical preset: displayed block structure of H") {
  ProblemData pd = test::small_classical(2, 2);
  ALParams ap = random_params(pd, 1.3, 0.7);
  DualPoint dp = random_dual(pd);
  NewtonOperator H = assemble_operator(ap, dp, pd);
  Matrix arg = eval_shifted_argument(ap, dp, pd);
  Matrix theta = (arg.array() > 0.0).cast<double>();
  Matrix expect = Matrix::Zero(4, 4);
  expect.block(0, 0, 2, 2) = Matrix(theta.rowwise().sum().asDiagonal());
  expect.block(0, 2, 2, 2) = theta;
  expect.block(2, 0, 2, 2) = theta.transpose();
  expect.block(2, 2, 2, 2) = Matrix(theta.colwise().sum().transpose().asDiagonal());
  expect = ap.sigma * expect + (ap.tau / ap.sigma) * Matrix::Identity(4, 4);
  CHECK((H.dense() - expect).norm() <= 1e-13);
}

TEST_CASE("dense assembly equals the operator applied to basis vectors") {
  // group-regularized classical, partial and martingale geometries
  std::vector<ProblemData> problems;
  {
    ProblemData pd = test::small_classical(3, 4, 0.8, 0.5);
    pd.reg.partition = test::half_column_partition(3, 4);
    problems.push_back(std::move(pd));
  }
  {
    Vector a = test::rand_vec(3, 0.2, 1.0), b = test::rand_vec(3, 0.2, 1.0);
    problems.push_back(
        build_partial(test::rand_mat(3, 3), a, b, 0.4 * std::min(a.sum(), b.sum()), {}));
  }
  {
    Matrix P = test::rand_mat(3, 2), Q = test::rand_mat(4, 2);
    Vector a = test::rand_vec(3, 0.2, 1.0), b = test::rand_vec(4, 0.2, 1.0);
    problems.push_back(build_martingale(test::rand_mat(3, 4), a, b, P, Q, {}));
  }
  {
    // dense custom coupling exercises the generic assembly path
    Regularizer reg;
    reg.lambda1 = 0.5;
    reg.lambda2 = 0.2;
    reg.partition = test::half_column_partition(3, 3);
    Vector a = test::rand_vec(3, 0.2, 1.0), b = test::rand_vec(3, 0.2, 1.0);
    problems.push_back(build_custom(test::rand_mat(3, 3), a, b, test::rand_mat(2, 3),
                                    test::rand_mat(3, 2), test::rand_mat(2, 2),
                                    ConeKind::NonnegOrthant, ConeKind::Zero, reg));
  }

  for (const auto& pd : problems) {
    for (int t = 0; t < 5; ++t) {
      ALParams ap = random_params(pd, test::unif(0.5, 2.0), test::unif(0.5, 2.0));
      DualPoint dp = random_dual(pd);
      NewtonOperator H = assemble_operator(ap, dp, pd);
      Matrix dense = H.dense();
      const int N = H.dim();
      Matrix from_apply(N, N);
      for (int k = 0; k < N; ++k) {
        Vector e = Vector::Zero(N);
        e[k] = 1.0;
        from_apply.col(k) = H.apply_vec(e);
      }
      CHECK((dense - from_apply).norm() <= 1e-12 * (1.0 + dense.norm()));
      CHECK((dense - dense.transpose()).norm() <= 1e-12);
      CHECK((H.diagonal() - dense.diagonal()).norm() <= 1e-12 * (1.0 + dense.norm()));
    }
  }
}

TEST_CASE("apply is linear, symmetric and bounded below by tau/sigma") {
  ProblemData pd = test::small_classical(3, 3, 0.6, 0.4);
  pd.reg.partition = test::half_column_partition(3, 3);
  ALParams ap = random_params(pd, 1.1, 0.9);
  DualPoint dp = random_dual(pd);
  NewtonOperator H = assemble_operator(ap, dp, pd);

  CHECK(H.apply_vec(Vector::Zero(H.dim())).norm() == 0.0);
  for (int t = 0; t < 1000; ++t) {
    Vector d1 = test::rand_vec(H.dim()), d2 = test::rand_vec(H.dim());
    CHECK(d1.dot(H.apply_vec(d2)) == doctest::Approx(H.apply_vec(d1).dot(d2)).epsilon(1e-12));
    CHECK(d1.dot(H.apply_vec(d1)) >= (ap.tau / ap.sigma) * d1.squaredNorm() - 1e-12);
  }
}

TEST_CASE("newton solve on identity and random SPD systems") {
  ProblemData pd = test::small_classical(1, 1);
  SsnConfig cfg;

  // H = I by construction: tau/sigma = 1 and empty mask
  ALParams ap = random_params(pd, 1.0, 1.0);
  ap.anchor_primal.X = Matrix::Constant(1, 1, -9.0);
  NewtonOperator H = assemble_operator(ap, DualPoint::zero(pd), pd);
  DualPoint g{Matrix::Zero(0, 0), Vector::Ones(1), Vector::Ones(1)};
  LinSolveResult r = solve_newton_system(H, g, cfg);
  CHECK((r.d.u[0] + 1.0) <= 1e-12);
  CHECK((r.d.v[0] + 1.0) <= 1e-12);

  // random well-conditioned operators meet the inexact bound
  ProblemData pd5 = test::small_classical(3, 2, 0.4, 0.8);
  for (int t = 0; t < 20; ++t) {
    ALParams ap5 = random_params(pd5, test::unif(0.5, 2), test::unif(0.5, 2));
    NewtonOperator H5 = assemble_operator(ap5, random_dual(pd5), pd5);
    DualPoint g5{Matrix::Zero(0, 0), test::rand_vec(3), test::rand_vec(2)};
    LinSolveResult r5 = solve_newton_system(H5, g5, cfg);
    const double gn = g5.norm();
    CHECK(r5.achieved_residual <= std::min(cfg.eta_bar, std::pow(gn, 1.2)) + 1e-12);
  }
}

TEST_CASE("CG path on an ill-scaled operator still meets the bound or flags a stall") {
  ProblemData pd = test::small_classical(4, 4);
  ALParams ap = random_params(pd, 1.0, 1e-8);  // tiny tau/sigma floor: condition ~ 1e8
  DualPoint dp = random_dual(pd);
  NewtonOperator H = assemble_operator(ap, dp, pd);
  SsnConfig cfg;
  cfg.dense_threshold = 0;  // force CG
  DualPoint g{Matrix::Zero(0, 0), test::rand_vec(4), test::rand_vec(4)};
  LinSolveResult r = solve_newton_system(H, g, cfg);
  const double bound = std::min(cfg.eta_bar, std::pow(g.norm(), 1.2));
  if (!r.cg_stalled) CHECK(r.achieved_residual <= bound + 1e-12);
  CHECK(r.used_cg);
}

TEST_CASE("line search behavior") {
  ProblemData pd = test::small_classical(2, 2, 0.0, 1.0);
  ALParams ap = random_params(pd, 1.0, 1.0);
  DualPoint dp = random_dual(pd);
  SsnConfig cfg;
  DualPoint g = grad_Psi(ap, dp, pd);
  const double psi0 = eval_Psi(ap, dp, pd);

  SUBCASE("steepest descent direction is accepted with a finite backtrack count") {
    DualPoint dir = -1.0 * g;
    auto [alpha, next] = line_search(ap, dp, g, dir, cfg, pd, psi0);
    CHECK(alpha > 0.0);
    CHECK(eval_Psi(ap, next, pd) <= psi0 + cfg.mu * alpha * dot(g, dir));
  }

  SUBCASE("ascent direction raises NonDescentDirection") {
    DualPoint dir = g;
    CHECK_THROWS_AS(line_search(ap, dp, g, dir, cfg, pd, psi0), NonDescentDirection);
  }

  SUBCASE("Newton direction takes a full step near the solution") {
    auto [sol, stats] = ssn_solve(ap, dp, pd, cfg, [](const DeltaTriple& dt) {
      return dt.delta.norm() <= 1e-10;
    });
    // perturb slightly and confirm alpha = 1 on the next Newton step
    DualPoint near = sol;
    near.u.array() += 1e-4;
    NewtonOperator H = assemble_operator(ap, near, pd);
    DualPoint gn = grad_Psi(ap, near, pd);
    LinSolveResult lin = solve_newton_system(H, gn, cfg);
    auto [alpha, next] = line_search(ap, near, gn, lin.d, cfg, pd, eval_Psi(ap, near, pd));
    CHECK(alpha == doctest::Approx(1.0));
  }
}

TEST_CASE("ssn_solve convergence, zero-start shortcut and monotone descent") {
  ProblemData pd = test::small_classical(2, 2);
  ALParams ap = random_params(pd, 1.5, 2.0);
  SsnConfig cfg;

  auto stop12 = [](const DeltaTriple& dt) { return dt.delta.norm() <= 1e-12; };
  auto [sol, stats] = ssn_solve(ap, DualPoint::zero(pd), pd, cfg, stop12);
  CHECK(grad_Psi(ap, sol, pd).norm() <= 1e-12);
  CHECK(stats.iterations >= 1);

  // restarting at the minimizer returns immediately
  auto [sol2, stats2] = ssn_solve(ap, sol, pd, cfg, stop12);
  CHECK(stats2.iterations == 0);
  CHECK(stats2.linear_systems == 0);

  // compare against a high-precision first-order method on the same subproblem
  DualPoint ref = DualPoint::zero(pd);
  {
    double step = 1e-2;
    for (int it = 0; it < 400000; ++it) {
      DualPoint g = grad_Psi(ap, ref, pd);
      ref = ref - step * g;
    }
  }
  CHECK((sol - ref).norm() <= 1e-6 * (1.0 + ref.norm()));

  // Psi decreases strictly along accepted steps
  std::vector<double> psis;
  DualPoint cur = DualPoint::zero(pd);
  psis.push_back(eval_Psi(ap, cur, pd));
  for (int j = 0; j < 4; ++j) {
    NewtonOperator H = assemble_operator(ap, cur, pd);
    DualPoint g = grad_Psi(ap, cur, pd);
    if (g.norm() <= 1e-13) break;
    LinSolveResult lin = solve_newton_system(H, g, cfg);
    auto [alpha, next] = line_search(ap, cur, g, lin.d, cfg, pd, psis.back());
    cur = next;
    psis.push_back(eval_Psi(ap, cur, pd));
    CHECK(psis[psis.size() - 1] < psis[psis.size() - 2]);
  }
}

TEST_CASE("local superlinear tail of the gradient norms") {
  // residual pairs with r_j <= 1e-4 must satisfy r_{j+1} <= r_j^{1.1}
  // on strict-branch subproblems
  int tails = 0;
  for (int t = 0; t < 16; ++t) {
    ProblemData pd = test::small_classical(6, 6, (t % 2) * 0.5, 0.3);
    if (t % 2) pd.reg.partition = test::half_column_partition(6, 6);
    ALParams ap = random_params(pd, test::unif(0.8, 1.5), test::unif(0.8, 1.5));
    ap.anchor_dual = DualPoint::zero(pd);
    SsnConfig cfg;
    auto [sol, stats] = ssn_solve(ap, DualPoint::zero(pd), pd, cfg, [](const DeltaTriple& dt) {
      return dt.delta.norm() <= 1e-13;
    });
    for (std::size_t j = 0; j + 1 < stats.grad_norms.size(); ++j) {
      const double rj = stats.grad_norms[j], rn = stats.grad_norms[j + 1];
      if (rj <= 1e-4 && rj > 1e-13) {
        CHECK(rn <= std::pow(rj, 1.1) + 1e-15);
        ++tails;
      }
    }
  }
  CHECK(tails > 0);
}
