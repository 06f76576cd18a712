#pragma once

#include "otpalm/types.hpp"

namespace otpalm {

// Constraint presets of the regularized transport model. The unified form
// carries AXB = S together with cone constraints on the marginal slacks.
ProblemData build_classical(Matrix C, Vector alpha, Vector beta, Regularizer reg);
ProblemData build_partial(Matrix C, Vector alpha, Vector beta, double s, Regularizer reg);
ProblemData build_martingale(Matrix C, Vector alpha, Vector beta,
                             Matrix P, Matrix Q, Regularizer reg);
ProblemData build_custom(Matrix C, Vector alpha, Vector beta, Matrix A, Matrix B, Matrix S,
                         ConeKind cone_r, ConeKind cone_c, Regularizer reg);

std::vector<Diagnostic> validate(const ProblemData& pd);

// <C,X> + lambda1 * sum_G omega_G ||x_G|| + (lambda2/2) ||X||_F^2.
// Indicator terms are excluded; feasibility is reported separately.
double primal_objective(const ProblemData& pd, const PrimalPoint& pt);

struct DualObjective {
  double value = 0.0;
  double domain_distance = 0.0;  // Euclidean distance of the conjugate argument to dom p*
};

DualObjective dual_objective(const ProblemData& pd, const DualPoint& dp);

// Residual norms of the unified constraints at X (with slacks y, z).
double unified_feasibility_violation(const ProblemData& pd, const PrimalPoint& pt);

// max of the scaled constraint-violation ratios (marginals/coupling, X >= 0,
// and the polar-cone violations of y and z).
double primal_feasibility_measure(const ProblemData& pd, const PrimalPoint& pt);

// Uniformly rescaled instance: cost-side data divided by 1 + ||C||_F and
// marginal-side data by 1 + sqrt(||alpha||^2 + ||beta||^2 + ||S||_F^2), with
// the regularization weights adjusted so the problems are exactly equivalent.
// Primal points map back as X = primal_scale * X~, dual as u = dual_scale * u~.
struct ScaledInstance {
  ProblemData pd;
  double primal_scale = 1.0;
  double dual_scale = 1.0;
};

ScaledInstance scale_instance(const ProblemData& pd);

}  // namespace otpalm
