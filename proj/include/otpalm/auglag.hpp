#pragma once

#include "otpalm/problem.hpp"
#include "otpalm/prox.hpp"

namespace otpalm {

// Proximal-subproblem data: penalty sigma, proximal weight tau and the
// anchor pair (X^k, y^k, z^k), (W^k, u^k, v^k).
struct ALParams {
  double sigma = 1.0;
  double tau = 1.0;
  PrimalPoint anchor_primal;
  DualPoint anchor_dual;
};

// X^k + sigma * (u 1^T + 1 v^T + A^T W B^T - C); its prox is X_sigma.
Matrix eval_shifted_argument(const ALParams& ap, const DualPoint& dp, const ProblemData& pd);

// Psi = L_sigma(W,u,v, anchors) + (tau/2sigma) * ||dp - anchor_dual||^2,
// with L_sigma written through Moreau envelopes.
double eval_Psi(const ALParams& ap, const DualPoint& dp, const ProblemData& pd);

// Gradient of Psi over (W, u, v); reuses DualPoint as the block container.
DualPoint grad_Psi(const ALParams& ap, const DualPoint& dp, const ProblemData& pd);

struct DeltaTriple {
  DualPoint delta;     // grad Psi at the trial point
  PrimalPoint delta_p; // (X~ - X^k, y~ - y^k, z~ - z^k)
  DualPoint delta_d;   // (W~ - W^k, u~ - u^k, v~ - v^k)
};

// Prox-updated primal candidate (X~, y~, z~) and the residual triple at a
// trial dual point.
std::pair<DeltaTriple, PrimalPoint> delta_residuals(const ALParams& ap,
                                                    const DualPoint& dp_tilde,
                                                    const ProblemData& pd);

struct ResidualReport {
  double eta_X = 0, eta_y = 0, eta_z = 0, eta_feas = 0, eta_gap = 0;
  double eta = 0;
  double pobj = 0, dobj = 0;
  double domain_distance = 0;
};

// The five relative optimality residuals (unit prox parameter in the
// stationarity terms) and their maximum.
ResidualReport kkt_residuals(const ProblemData& pd, const PrimalPoint& pt, const DualPoint& dp);

}  // namespace otpalm
