#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "otpalm/problem.hpp"
#include "otpalm/prox.hpp"
#include "test_util.hpp"

using namespace otpalm;

TEST_CASE("classical builder: smallest instance") {
  ProblemData pd = build_classical(Matrix::Constant(1, 1, 2.0), Vector::Ones(1), Vector::Ones(1), {});
  CHECK(pd.constraints.mt() == 0);
  CHECK(pd.constraints.nt() == 0);
  CHECK(pd.constraints.cone_r == ConeKind::Zero);
  CHECK(pd.constraints.cone_c == ConeKind::Zero);
  CHECK(pd.constraints.preset == PresetKind::Classical);
  CHECK(validate(pd).empty());
}

TEST_CASE("classical builder rejects a negative marginal") {
  Vector a(2);
  a << 1.0, -1.0;
  CHECK_THROWS_WITH_AS(build_classical(Matrix::Zero(2, 2), a, Vector::Ones(2), {}),
                       doctest::Contains("NegativeMarginal"), std::invalid_argument);
}

TEST_CASE("classical builder on a rectangular instance") {
  ProblemData pd = build_classical(test::rand_mat(2, 3), Vector::Ones(2), Vector::Ones(3), {});
  CHECK(pd.m() == 2);
  CHECK(pd.n() == 3);
  // zero cones force y = z = 0
  CHECK(prox_cone(pd.constraints.cone_r, 1.0, test::rand_vec(2)).isZero());
}

TEST_CASE("partial builder shapes and mass bounds") {
  Vector a = Vector::Constant(2, 0.5), b = Vector::Constant(2, 0.5);
  ProblemData pd = build_partial(Matrix::Zero(2, 2), a, b, 0.6, {});
  CHECK(pd.constraints.A.rows() == 1);
  CHECK(pd.constraints.A.cols() == 2);
  CHECK(pd.constraints.B.rows() == 2);
  CHECK(pd.constraints.B.cols() == 1);
  CHECK(pd.constraints.S(0, 0) == doctest::Approx(0.6));
  CHECK(pd.constraints.cone_r == ConeKind::NonnegOrthant);
  CHECK(pd.constraints.cone_c == ConeKind::NonnegOrthant);

  CHECK_THROWS_WITH_AS(build_partial(Matrix::Zero(2, 2), a, b, 1.5, {}),
                       doctest::Contains("InvalidMass"), std::invalid_argument);
  // boundary s = sum(alpha) = sum(beta) is allowed
  CHECK_NOTHROW(build_partial(Matrix::Zero(2, 2), a, b, 1.0, {}));
}

TEST_CASE("martingale builder: unified blocks") {
  Matrix P(1, 1), Q(2, 1), C(1, 2);
  P << 1.0;
  Q << 0.0, 2.0;
  C << 0.5, 0.5;
  Vector a = Vector::Ones(1), b = Vector::Constant(2, 0.5);
  ProblemData pd = build_martingale(C, a, b, P, Q, {});
  CHECK(pd.constraints.A.isIdentity(0.0));
  CHECK(pd.constraints.S(0, 0) == doctest::Approx(1.0));
  CHECK(pd.constraints.B(0, 0) == doctest::Approx(0.0));
  CHECK(pd.constraints.B(1, 0) == doctest::Approx(2.0));

  Matrix Q3(2, 3);
  CHECK_THROWS_WITH_AS(build_martingale(C, a, b, P, Q3, {}),
                       doctest::Contains("DimensionMismatch"), std::invalid_argument);
}

TEST_CASE("martingale feasibility of the diagonal coupling when p = q") {
  // p = q, alpha = beta: X = Diag(alpha) satisfies XQ = Diag(alpha) P exactly
  const int n = 4;
  Matrix P = test::rand_mat(n, 1, 0.5, 2.0);
  Vector a = test::rand_vec(n, 0.1, 1.0);
  a /= a.sum();
  ProblemData pd = build_martingale(Matrix::Zero(n, n), a, a, P, P, {});
  PrimalPoint pt{Matrix(a.asDiagonal()), Vector::Zero(n), Vector::Zero(n)};
  CHECK(unified_feasibility_violation(pd, pt) <= 1e-12);
}

TEST_CASE("validate flags overlapping and non-covering partitions") {
  ProblemData pd = test::small_classical(2, 2);
  pd.reg.partition = GroupPartition::from_groups(
      2, 2, {{{0, 0}, {0, 1}}, {{0, 1}, {1, 0}, {1, 1}}}, {});
  auto diags = validate(pd);
  bool overlap = false;
  for (const auto& d : diags) overlap = overlap || d.code == "GroupOverlap";
  CHECK(overlap);

  pd.reg.partition = GroupPartition::from_groups(2, 2, {{{0, 0}, {1, 1}}}, {});
  diags = validate(pd);
  bool gap = false;
  for (const auto& d : diags) gap = gap || d.code == "GroupCoverageGap";
  CHECK(gap);
}

TEST_CASE("primal objective values") {
  ProblemData pd = build_classical(Matrix::Constant(1, 1, 2.0), Vector::Ones(1), Vector::Ones(1), {});
  PrimalPoint pt{Matrix::Constant(1, 1, 1.0), Vector::Zero(1), Vector::Zero(1)};
  CHECK(primal_objective(pd, pt) == doctest::Approx(2.0));

  // C = 0 (1 x 2), one group, omega = 1, lambda1 = 1, lambda2 = 2, X = [3 4]
  Regularizer reg;
  reg.lambda1 = 1.0;
  reg.lambda2 = 2.0;
  ProblemData pd2 = build_classical(Matrix::Zero(1, 2), Vector::Ones(1), Vector::Ones(2), reg);
  PrimalPoint pt2{Matrix(1, 2), Vector::Zero(1), Vector::Zero(2)};
  pt2.X << 3.0, 4.0;
  CHECK(primal_objective(pd2, pt2) == doctest::Approx(30.0));

  pt2.X.setZero();
  CHECK(primal_objective(pd2, pt2) == doctest::Approx(0.0));
}

TEST_CASE("dual objective: strong duality on the 1x1 problem") {
  ProblemData pd = build_classical(Matrix::Constant(1, 1, 2.0), Vector::Ones(1), Vector::Ones(1), {});
  DualPoint dp{Matrix::Zero(0, 0), Vector::Constant(1, 2.0), Vector::Zero(1)};
  DualObjective d = dual_objective(pd, dp);
  CHECK(d.value == doctest::Approx(2.0));
  CHECK(d.domain_distance == doctest::Approx(0.0));
}

TEST_CASE("dual objective: zero dual point is on the domain when C >= 0") {
  ProblemData pd = test::small_classical(3, 4);
  DualObjective d = dual_objective(pd, DualPoint::zero(pd));
  CHECK(d.value == doctest::Approx(0.0));
  CHECK(d.domain_distance == doctest::Approx(0.0));
}

TEST_CASE("dual objective always finite when lambda2 > 0") {
  ProblemData pd = test::small_classical(3, 3, 0.0, 1.5);
  for (int t = 0; t < 20; ++t) {
    DualPoint dp{Matrix::Zero(0, 0), test::rand_vec(3, -5, 5), test::rand_vec(3, -5, 5)};
    DualObjective d = dual_objective(pd, dp);
    CHECK(std::isfinite(d.value));
    CHECK(d.domain_distance == 0.0);
  }
}

namespace {

// native membership of the three presets, straight from their definitions
bool native_member(const ProblemData& pd, const Matrix& X, double tol) {
  if ((X.array() < -tol).any()) return false;
  Vector r = X.rowwise().sum(), c = X.colwise().sum().transpose();
  switch (pd.constraints.preset) {
    case PresetKind::Classical:
      return (r - pd.alpha).norm() <= tol && (c - pd.beta).norm() <= tol;
    case PresetKind::Partial:
      return std::abs(X.sum() - pd.constraints.partial_mass) <= tol &&
             (r.array() <= pd.alpha.array() + tol).all() &&
             (c.array() <= pd.beta.array() + tol).all();
    case PresetKind::Martingale:
      return (X * pd.constraints.B - pd.constraints.S).norm() <= tol &&
             (r - pd.alpha).norm() <= tol && (c - pd.beta).norm() <= tol;
    default:
      return false;
  }
}

// unified membership with the slack variables eliminated by their residuals
bool unified_member(const ProblemData& pd, const Matrix& X, double tol) {
  if ((X.array() < -tol).any()) return false;
  const auto& cs = pd.constraints;
  if (cs.has_coupling() && (cs.A * X * cs.B - cs.S).norm() > tol) return false;
  Vector ry = pd.alpha - X.rowwise().sum();
  Vector rz = pd.beta - X.colwise().sum().transpose();
  auto in_cone = [tol](ConeKind k, const Vector& w) {
    return k == ConeKind::Zero ? w.norm() <= tol : (w.array() >= -tol).all();
  };
  return in_cone(cs.cone_r, ry) && in_cone(cs.cone_c, rz);
}

}  // namespace

TEST_CASE("preset round-trip: native and unified membership agree") {
  std::vector<ProblemData> problems;
  problems.push_back(test::small_classical(3, 4));
  {
    Vector a = test::rand_vec(3, 0.2, 1.0), b = test::rand_vec(4, 0.2, 1.0);
    problems.push_back(build_partial(test::rand_mat(3, 4), a, b,
                                     0.5 * std::min(a.sum(), b.sum()), {}));
  }
  {
    Matrix P = test::rand_mat(3, 1), Q = test::rand_mat(4, 1);
    Vector a = test::rand_vec(3, 0.2, 1.0), b = test::rand_vec(4, 0.2, 1.0);
    problems.push_back(build_martingale(test::rand_mat(3, 4), a, b, P, Q, {}));
  }
  for (const auto& pd : problems) {
    for (int t = 0; t < 200; ++t) {
      Matrix X = test::rand_mat(pd.m(), pd.n(), -0.2, 1.0);
      if (t % 3 == 0) {
        // push some samples close to feasibility to exercise both outcomes
        X = X.cwiseMax(0.0);
        X *= pd.alpha.sum() / std::max(X.sum(), 1e-9);
      }
      CHECK(native_member(pd, X, 1e-12) == unified_member(pd, X, 1e-12));
    }
  }
}

TEST_CASE("weak duality on random feasible-ish pairs") {
  // exact feasible primal points for the classical preset via row/col scaling
  ProblemData pd = test::small_classical(3, 3, 0.5, 0.7);
  pd.reg.partition = test::half_column_partition(3, 3);
  for (int t = 0; t < 50; ++t) {
    // Sinkhorn-style scaling gives near-feasible nonnegative X
    Matrix X = test::rand_mat(3, 3, 0.05, 1.0);
    for (int it = 0; it < 200; ++it) {
      for (int i = 0; i < 3; ++i) X.row(i) *= pd.alpha[i] / X.row(i).sum();
      for (int j = 0; j < 3; ++j) X.col(j) *= pd.beta[j] / X.col(j).sum();
    }
    PrimalPoint pt{X, Vector::Zero(3), Vector::Zero(3)};
    if (unified_feasibility_violation(pd, pt) > 1e-9) continue;
    double pobj = primal_objective(pd, pt);
    for (int s = 0; s < 10; ++s) {
      DualPoint dp{Matrix::Zero(0, 0), test::rand_vec(3, -2, 2), test::rand_vec(3, -2, 2)};
      DualObjective d = dual_objective(pd, dp);
      if (d.domain_distance > 0) continue;
      CHECK(d.value <= pobj + 1e-9 * (1.0 + std::abs(pobj)));
    }
  }
}

TEST_CASE("primal objective is convex along segments") {
  ProblemData pd = test::small_classical(3, 4, 1.2, 0.3);
  pd.reg.partition = test::half_column_partition(3, 4);
  for (int t = 0; t < 100; ++t) {
    PrimalPoint a{test::rand_mat(3, 4, -1, 2), Vector::Zero(3), Vector::Zero(4)};
    PrimalPoint b{test::rand_mat(3, 4, -1, 2), Vector::Zero(3), Vector::Zero(4)};
    PrimalPoint mid{0.5 * (a.X + b.X), Vector::Zero(3), Vector::Zero(4)};
    CHECK(primal_objective(pd, mid) <=
          0.5 * primal_objective(pd, a) + 0.5 * primal_objective(pd, b) + 1e-12);
  }
}
