#include "otpalm/instance_gen.hpp"

#include <algorithm>
#include <cmath>

#include "otpalm/rng.hpp"

namespace otpalm {

double call_function(const DiscreteMeasure& mu, double k) {
  double out = 0.0;
  for (Eigen::Index j = 0; j < mu.support.size(); ++j)
    out += mu.weights[j] * std::max(mu.support[j] - k, 0.0);
  return out;
}

DiscreteMeasure convex_order_sup(const DiscreteMeasure& mu, const DiscreteMeasure& nu_prime) {
  if (mu.support.size() == 0 || nu_prime.support.size() == 0)
    throw std::invalid_argument("EmptySupport: both measures need at least one atom");

  // merged, deduplicated grid
  std::vector<double> grid(mu.support.data(), mu.support.data() + mu.support.size());
  grid.insert(grid.end(), nu_prime.support.data(),
              nu_prime.support.data() + nu_prime.support.size());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const int K = static_cast<int>(grid.size());

  const double target_mean = std::max(mu.mean(), nu_prime.mean());
  if (K == 1) return {Vector::Constant(1, grid[0]), Vector::Ones(1)};

  Vector F(K);
  for (int t = 0; t < K; ++t)
    F[t] = std::max(call_function(mu, grid[t]), call_function(nu_prime, grid[t]));

  // masses = slope changes of the interpolated call function
  Vector w = Vector::Zero(K);
  auto slope = [&](int t) { return (F[t + 1] - F[t]) / (grid[t + 1] - grid[t]); };
  for (int t = 1; t + 1 < K; ++t) w[t] = slope(t) - slope(t - 1);

  // endpoint masses pinned by total mass 1 and the target mean
  double interior_mass = 0.0, interior_mean = 0.0;
  for (int t = 1; t + 1 < K; ++t) {
    interior_mass += w[t];
    interior_mean += w[t] * grid[t];
  }
  const double a = 1.0 - interior_mass;
  const double b = target_mean - interior_mean;
  // w0 + wK = a, w0*x0 + wK*xK = b
  const double x0 = grid.front(), xK = grid.back();
  w[K - 1] = (b - a * x0) / (xK - x0);
  w[0] = a - w[K - 1];

  std::vector<double> sup_out, w_out;
  for (int t = 0; t < K; ++t) {
    const double wt = std::max(w[t], 0.0);
    if (wt > 1e-14) {
      sup_out.push_back(grid[t]);
      w_out.push_back(wt);
    }
  }
  DiscreteMeasure nu;
  nu.support = Eigen::Map<const Vector>(sup_out.data(), static_cast<Eigen::Index>(sup_out.size()));
  nu.weights = Eigen::Map<const Vector>(w_out.data(), static_cast<Eigen::Index>(w_out.size()));
  return nu;
}

namespace {

Matrix squared_distance_cost(const Matrix& P, const Matrix& Q) {
  const auto m = P.rows(), n = Q.rows();
  Matrix C(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) C(i, j) = (P.row(i) - Q.row(j)).squaredNorm();
  return C;
}

}  // namespace

ProblemData gen_classical(int m, int n, std::uint64_t seed) {
  Rng rng(seed);
  Vector alpha = rng.uniform_vec(m);
  alpha /= alpha.sum();
  Vector beta = rng.uniform_vec(n);
  beta /= beta.sum();

  // three equal-weight unit-covariance mixture components in R^3,
  // means drawn once per seed from Normal(0, 4 I)
  Matrix means(3, 3);
  for (int c = 0; c < 3; ++c) means.row(c) = 2.0 * rng.normal_vec(3).transpose();
  auto draw_support = [&](int count) {
    Matrix pts(count, 3);
    for (int i = 0; i < count; ++i) {
      const int c = static_cast<int>(rng.raw() % 3);
      pts.row(i) = means.row(c) + rng.normal_vec(3).transpose();
    }
    return pts;
  };
  Matrix P = draw_support(m), Q = draw_support(n);
  return build_classical(squared_distance_cost(P, Q), std::move(alpha), std::move(beta), {});
}

ProblemData gen_martingale(int m, int n_prime, std::uint64_t seed) {
  Rng rng(seed);
  DiscreteMeasure mu;
  mu.support = Vector(m);
  for (int i = 0; i < m; ++i) mu.support[i] = rng.lognormal(0.0, 0.1);
  mu.weights = Vector::Constant(m, 1.0 / m);

  DiscreteMeasure nup;
  nup.support = Vector(n_prime);
  for (int j = 0; j < n_prime; ++j) nup.support[j] = rng.lognormal(0.0, 0.15);
  nup.weights = Vector::Constant(n_prime, 1.0 / n_prime);

  // shift the source so both means agree with the supremum's mean
  const double target = std::max(mu.mean(), nup.mean());
  mu.support.array() += target - mu.mean();

  DiscreteMeasure nu = convex_order_sup(mu, nup);
  const int n = static_cast<int>(nu.support.size());

  Matrix C(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) C(i, j) = std::pow(std::abs(mu.support[i] - nu.support[j]), 2.1);

  Matrix P = mu.support, Q = nu.support;  // m x 1 and n x 1
  return build_martingale(std::move(C), mu.weights, nu.weights, std::move(P), std::move(Q), {});
}

ProblemData gen_group_da(int m, int n, int m1, double lambda1, double lambda2,
                         std::uint64_t seed, GenSpec::OmegaRule omega_rule) {
  if (m1 <= 0) m1 = (m + 1) / 2;
  if (m1 >= m) throw std::invalid_argument("gen_group_da: need 1 <= m1 < m");
  Rng rng(seed);

  Matrix P(m, 2);
  for (int i = 0; i < m; ++i) {
    const double cx = i < m1 ? -1.0 : 1.0;
    P(i, 0) = cx + 0.5 * rng.normal();
    P(i, 1) = 2.0 + 0.5 * rng.normal();
  }
  const double sd = std::sqrt(0.5);
  Matrix Q(n, 2);
  for (int j = 0; j < n; ++j) {
    if (rng.uniform01() <= 0.5) {
      Q(j, 0) = -2.0 + sd * rng.normal();
      Q(j, 1) = 2.0 + sd * rng.normal();
    } else {
      Q(j, 0) = 2.0 + sd * rng.normal();
      Q(j, 1) = 3.0 + sd * rng.normal();
    }
  }

  // one group per (column, source class): 2n groups of sizes m1 and m - m1
  std::vector<std::vector<std::pair<int, int>>> groups;
  groups.reserve(2 * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<int, int>> g0, g1;
    for (int i = 0; i < m1; ++i) g0.emplace_back(i, j);
    for (int i = m1; i < m; ++i) g1.emplace_back(i, j);
    groups.push_back(std::move(g0));
    groups.push_back(std::move(g1));
  }
  Vector omega(2 * n);
  for (int g = 0; g < 2 * n; ++g) {
    const double size = (g % 2 == 0) ? m1 : m - m1;
    omega[g] = omega_rule == GenSpec::OmegaRule::SqrtSize ? std::sqrt(size) : 1.0;
  }

  Regularizer reg;
  reg.lambda1 = lambda1;
  reg.lambda2 = lambda2;
  reg.partition = GroupPartition::from_groups(m, n, std::move(groups), std::move(omega));

  return build_classical(squared_distance_cost(P, Q), Vector::Constant(m, 1.0 / m),
                         Vector::Constant(n, 1.0 / n), std::move(reg));
}

ProblemData generate(const GenSpec& spec) {
  switch (spec.family) {
    case GenSpec::Family::Classical:
      return gen_classical(spec.m, spec.n, spec.seed);
    case GenSpec::Family::Martingale:
      return gen_martingale(spec.m, spec.n, spec.seed);
    default:
      return gen_group_da(spec.m, spec.n, spec.m1, spec.lambda1, spec.lambda2, spec.seed,
                          spec.omega_rule);
  }
}

std::vector<std::optional<Vector>> barycentric_map(const Matrix& X, const Matrix& Q) {
  if (X.cols() != Q.rows())
    throw std::invalid_argument("barycentric_map: X columns must match Q rows");
  std::vector<std::optional<Vector>> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double rowmass = X.row(i).sum();
    if (rowmass < 1e-15) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.emplace_back(Vector((X.row(i) * Q).transpose() / rowmass));
  }
  return out;
}

}  // namespace otpalm
