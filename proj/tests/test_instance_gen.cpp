#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "otpalm/cipalm.hpp"
#include "otpalm/instance_gen.hpp"
#include "otpalm/io.hpp"

#include <nlohmann/json.hpp>
#include <random>

using namespace otpalm;

namespace {

DiscreteMeasure atoms(std::initializer_list<double> support, std::initializer_list<double> w) {
  DiscreteMeasure m;
  m.support = Vector(static_cast<Eigen::Index>(support.size()));
  m.weights = Vector(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double s : support) m.support[i++] = s;
  i = 0;
  for (double x : w) m.weights[i++] = x;
  return m;
}

}  // namespace

TEST_CASE("call function values") {
  DiscreteMeasure one = atoms({1.0}, {1.0});
  CHECK(call_function(one, 0.0) == doctest::Approx(1.0));
  CHECK(call_function(one, 5.0) == doctest::Approx(0.0));
  DiscreteMeasure two = atoms({0.0, 2.0}, {0.5, 0.5});
  CHECK(call_function(two, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("convex order supremum on hand cases") {
  DiscreteMeasure mu = atoms({1.0}, {1.0});
  DiscreteMeasure nup = atoms({0.0, 2.0}, {0.5, 0.5});
  DiscreteMeasure nu = convex_order_sup(mu, nup);
  REQUIRE(nu.support.size() == 2);
  CHECK(nu.support[0] == doctest::Approx(0.0));
  CHECK(nu.support[1] == doctest::Approx(2.0));
  CHECK(nu.weights[0] == doctest::Approx(0.5));
  CHECK(nu.weights[1] == doctest::Approx(0.5));
  CHECK(nu.mean() == doctest::Approx(1.0));

  // idempotence
  DiscreteMeasure same = convex_order_sup(nup, nup);
  REQUIRE(same.support.size() == 2);
  CHECK((same.weights - nup.weights).norm() <= 1e-14);

  CHECK_THROWS_WITH_AS(convex_order_sup(atoms({}, {}), nup), doctest::Contains("EmptySupport"),
                       std::invalid_argument);
}

TEST_CASE("convex order supremum dominates at every merged breakpoint") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  for (int t = 0; t < 30; ++t) {
    const int m = 3 + static_cast<int>(eng() % 5), n = 3 + static_cast<int>(eng() % 5);
    DiscreteMeasure mu, nup;
    mu.support = Vector(m);
    mu.weights = Vector::Constant(m, 1.0 / m);
    for (int i = 0; i < m; ++i) mu.support[i] = unif(eng);
    nup.support = Vector(n);
    nup.weights = Vector::Constant(n, 1.0 / n);
    for (int j = 0; j < n; ++j) nup.support[j] = unif(eng);
    // shift the source mean onto the target convention first
    mu.support.array() += std::max(mu.mean(), nup.mean()) - mu.mean();

    DiscreteMeasure nu = convex_order_sup(mu, nup);
    CHECK(nu.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nu.mean() == doctest::Approx(std::max(mu.mean(), nup.mean())).epsilon(1e-10));
    for (Eigen::Index k = 0; k < nu.support.size(); ++k) {
      CHECK(call_function(nu, nu.support[k]) >= call_function(mu, nu.support[k]) - 1e-12);
      CHECK(call_function(nu, nu.support[k]) >= call_function(nup, nu.support[k]) - 1e-12);
    }
  }
}

TEST_CASE("classical generator determinism and normalization") {
  ProblemData a = gen_classical(12, 9, 42);
  ProblemData b = gen_classical(12, 9, 42);
  CHECK(instance_to_json(a).dump() == instance_to_json(b).dump());
  CHECK(a.alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.beta.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.constraints.preset == PresetKind::Classical);
  CHECK(validate(a).empty());

  ProblemData c = gen_classical(12, 9, 43);
  CHECK(instance_to_json(a).dump() != instance_to_json(c).dump());
}

TEST_CASE("martingale generator: means match and the instance is solvable") {
  ProblemData pd = gen_martingale(25, 25, 7);
  CHECK(validate(pd).empty());
  // martingale necessary condition: equal first moments
  const auto& cs = pd.constraints;
  Vector p = cs.S.col(0).cwiseQuotient(pd.alpha);  // S = Diag(alpha) P
  CHECK(pd.alpha.dot(p) == doctest::Approx(pd.beta.dot(cs.B.col(0))).epsilon(1e-10));

  SolverConfig cfg;
  SolveReport rep = solve(pd, cfg);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.final_residuals.eta_feas < 1e-6);

  ProblemData again = gen_martingale(25, 25, 7);
  CHECK(instance_to_json(pd).dump() == instance_to_json(again).dump());
}

TEST_CASE("group domain-adaptation generator structure") {
  ProblemData pd = gen_group_da(10, 6, 4, 1.0, 1.0, 3);
  CHECK(validate(pd).empty());
  const auto& part = pd.reg.partition;
  CHECK(part.groups.size() == 12);  // 2n groups
  for (std::size_t g = 0; g < part.groups.size(); ++g) {
    const auto sz = part.groups[g].size();
    CHECK((sz == 4 || sz == 6));
    CHECK(part.omega[static_cast<Eigen::Index>(g)] == 1.0);
  }
  CHECK(pd.constraints.preset == PresetKind::Classical);
  CHECK(pd.alpha[0] == doctest::Approx(0.1));
  CHECK(pd.beta[0] == doctest::Approx(1.0 / 6.0));

  ProblemData again = gen_group_da(10, 6, 4, 1.0, 1.0, 3);
  CHECK(instance_to_json(pd).dump() == instance_to_json(again).dump());

  // m1 defaults to ceil(m/2); sqrt-size weights exposed as an option
  ProblemData def = gen_group_da(9, 4, 0, 1.0, 0.0, 3, GenSpec::OmegaRule::SqrtSize);
  CHECK(def.reg.partition.groups[0].size() == 5);
  CHECK(def.reg.partition.omega[0] == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("generate dispatches on the spec family") {
  GenSpec spec;
  spec.family = GenSpec::Family::GroupDA;
  spec.m = 8;
  spec.n = 5;
  spec.m1 = 3;
  spec.lambda1 = 0.5;
  spec.lambda2 = 0.5;
  spec.seed = 1;
  ProblemData pd = generate(spec);
  CHECK(pd.reg.partition.groups.size() == 10);
  CHECK(pd.reg.lambda1 == doctest::Approx(0.5));
}

TEST_CASE("barycentric map") {
  Matrix X(3, 2), Q(2, 1);
  X << 0.5, 0.5, 1.0, 0.0, 0.0, 0.0;
  Q << 0.0, 2.0;
  auto mapped = barycentric_map(X, Q);
  REQUIRE(mapped.size() == 3);
  REQUIRE(mapped[0].has_value());
  CHECK((*mapped[0])[0] == doctest::Approx(1.0));
  REQUIRE(mapped[1].has_value());
  CHECK((*mapped[1])[0] == doctest::Approx(0.0));
  CHECK_FALSE(mapped[2].has_value());
}
