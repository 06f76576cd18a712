#pragma once

#include <cstdint>
#include <optional>

#include "otpalm/problem.hpp"

namespace otpalm {

struct GenSpec {
  enum class Family { Classical, Martingale, GroupDA };
  Family family = Family::Classical;
  int m = 0;
  int n = 0;        // n' for the martingale family (pre-supremum sample count)
  int m1 = 0;       // GroupDA: first-class size; 0 -> ceil(m/2)
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::uint64_t seed = 0;
  enum class OmegaRule { One, SqrtSize } omega_rule = OmegaRule::One;
};

// One-dimensional discrete measure (weights need not be normalized).
struct DiscreteMeasure {
  Vector support;
  Vector weights;
  double mean() const { return support.dot(weights); }
  double mass() const { return weights.sum(); }
};

// Sum_j w_j max(q_j - k, 0): the convex piecewise-linear call function.
double call_function(const DiscreteMeasure& mu, double k);

// Measure on the merged grid whose call function interpolates the pointwise
// maximum of the two inputs' call functions; dominates both in convex order
// and carries mass 1 with mean max(mean(mu), mean(nu')).
DiscreteMeasure convex_order_sup(const DiscreteMeasure& mu, const DiscreteMeasure& nu_prime);

ProblemData gen_classical(int m, int n, std::uint64_t seed);
ProblemData gen_martingale(int m, int n_prime, std::uint64_t seed);
ProblemData gen_group_da(int m, int n, int m1, double lambda1, double lambda2,
                         std::uint64_t seed,
                         GenSpec::OmegaRule omega_rule = GenSpec::OmegaRule::One);

ProblemData generate(const GenSpec& spec);

// Row barycenters p~_i = sum_j X_ij q_j / sum_j X_ij. Rows with mass below
// 1e-15 come back empty (absent).
std::vector<std::optional<Vector>> barycentric_map(const Matrix& X, const Matrix& Q);

}  // namespace otpalm
