#pragma once

#include <functional>

#include "otpalm/problem.hpp"
#include "otpalm/prox.hpp"

namespace otpalm {

struct OracleConfig {
  double tol = 1e-9;
  long max_iters = 2'000'000;
};

// Brute-force prox of one group's penalty by smoothed projected gradient
// descent with a norm-smoothing homotopy; independent of the closed forms.
Vector prox_oracle(const ProxParams& pp, const Vector& x, const OracleConfig& cfg = {});

struct LpSolution {
  Matrix X;
  Vector y, z;
  double objective = 0.0;
  bool exact = true;  // false when the enumeration fell back to a long ADMM run
};

// Exact LP optimum (lambda1 = lambda2 = 0) by enumerating basic feasible
// solutions of the unified equality system; ties broken by lexicographically
// smallest X in row-major reading order.
LpSolution lp_oracle(const ProblemData& pd, const OracleConfig& cfg = {});

struct RegSolution {
  Matrix X;
  double objective = 0.0;
};

// Strongly convex reference solve (lambda2 > 0): accelerated projected
// gradient over the feasible polytope, feasibility by Dykstra projections,
// group norms handled by a smoothing homotopy.
RegSolution reg_oracle(const ProblemData& pd, const OracleConfig& cfg = {});

// Central-difference Jacobian, column by column.
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                   double h = 1e-6);

}  // namespace otpalm
