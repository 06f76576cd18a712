#pragma once

#include <functional>
#include <optional>

#include "otpalm/admm.hpp"
#include "otpalm/ssn.hpp"

namespace otpalm {

// Inner-loop stopping regimes: a single relative parameter rho, or the
// absolute criteria driven by summable sequences eps_k / delta_k.
struct InexactPolicy {
  enum class Kind { Relative, AbsoluteA, AbsoluteB, AbsoluteAB };
  Kind kind = Kind::Relative;
  double rho = 0.01;
  std::function<double(int)> eps;
  std::function<double(int)> delta;

  static InexactPolicy relative(double rho_) {
    InexactPolicy p;
    p.kind = Kind::Relative;
    p.rho = rho_;
    return p;
  }
  static InexactPolicy absolute_a(double eps0, double pexp) {
    InexactPolicy p;
    p.kind = Kind::AbsoluteA;
    p.eps = [eps0, pexp](int k) { return eps0 / std::pow(k + 1.0, pexp); };
    return p;
  }
  static InexactPolicy absolute_b(double delta0, double qexp) {
    InexactPolicy p;
    p.kind = Kind::AbsoluteB;
    p.delta = [delta0, qexp](int k) { return delta0 / std::pow(k + 1.0, qexp); };
    return p;
  }
  static InexactPolicy absolute_ab(double eps0, double pexp, double delta0, double qexp) {
    InexactPolicy p = absolute_a(eps0, pexp);
    p.kind = Kind::AbsoluteAB;
    p.delta = [delta0, qexp](int k) { return delta0 / std::pow(k + 1.0, qexp); };
    return p;
  }
};

struct Schedules {
  double tau0 = 5.0;
  // tau_{k+1} = growth(k) * tau_k
  std::function<double(int)> tau_growth = [](int k) { return 1.0 + std::pow(k + 1.0, -1.1); };
  std::function<double(int)> sigma = [](int k) {
    return std::min(1e4, std::max(1e-4, std::pow(1.5, k)));
  };
};

// (tau_k, sigma_k)
std::pair<double, double> schedule_values(const Schedules& s, int k);

bool check_inexact(const InexactPolicy& policy, int k, const ALParams& ap, const DeltaTriple& dt);

// Multiplier correction from the prox-updated primal candidate; with
// apply_correction == false the trial dual point is kept as-is.
std::pair<DualPoint, PrimalPoint> correction_step(const ALParams& ap, const DualPoint& dp_tilde,
                                                  const PrimalPoint& pt_tilde,
                                                  const ProblemData& pd,
                                                  bool apply_correction = true);

enum class SolveStatus { Converged, MaxIter, TimeOut };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIter: return "MaxIter";
    default: return "TimeOut";
  }
}

struct IterationRecord {
  double eta, eta_X, eta_y, eta_z, eta_feas, eta_gap;
  double pobj, dobj;
  double sigma, tau;
  int inner_iters;
  int linear_systems;
  double delta_norm, delta_p_norm, delta_d_norm;
};

// Stored iterates of one outer step, for replaying the accepted step
// through the variable-metric criterion. Recorded in the coordinates the
// solver iterated in, so pair record_iterates with data_scaling = false
// when replaying against the caller's problem data.
struct OuterIterate {
  PrimalPoint anchor_primal, tilde_primal;
  DualPoint anchor_dual, tilde_dual;
  double sigma, tau;
};

struct SolveReport {
  int outer_iters = 0;
  long linear_systems_solved = 0;
  std::vector<IterationRecord> history;
  SolveStatus status = SolveStatus::MaxIter;
  PrimalPoint primal;
  DualPoint dual;
  ResidualReport final_residuals;
  double initial_eta = 0.0;  // residual at the starting point (after any warm start)
  double warmstart_seconds = 0.0;
  int warmstart_iters = 0;
  double solve_seconds = 0.0;
  bool inner_hit_max = false;
  std::vector<OuterIterate> iterates;  // populated when record_iterates is set
};

struct SolverConfig {
  InexactPolicy policy;
  Schedules schedules;
  double tol = 1e-6;
  int maxiter = 1000;
  double max_time_sec = std::numeric_limits<double>::infinity();
  bool apply_correction = true;
  SsnConfig ssn;
  std::optional<AdmmConfig> warm_start;  // engaged when present
  bool record_iterates = false;
  // Uniform rescale of (C, lambda) and (alpha, beta, S) before iterating;
  // residuals and reported points stay in original units. On raw cost scales
  // of order 1e2 and above, the late large-sigma subproblems otherwise lose
  // the Armijo decrease in rounding noise.
  bool data_scaling = true;
};

SolveReport solve(const ProblemData& pd, const SolverConfig& cfg,
                  std::optional<std::pair<DualPoint, PrimalPoint>> init = std::nullopt);

}  // namespace otpalm
