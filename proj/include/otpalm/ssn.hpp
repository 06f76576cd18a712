#pragma once

#include <functional>

#include "otpalm/auglag.hpp"

namespace otpalm {

struct SsnConfig {
  double mu = 1e-4;        // Armijo constant
  double delta = 0.5;      // backtracking ratio
  double eta_bar = 1e-3;   // cap of the inexact linear-solve bound
  double gamma = 0.2;      // superlinear exponent of the bound ||g||^{1+gamma}
  int dense_threshold = 4000;
  int max_inner_iters = 100;
  int max_cg_iters = 1000;
  int max_backtracks = 60;
};

// Newton operator H of the subproblem equation: diagonal-plus-spikes action
// on the coupling block composed with the constraint geometry, plus cone
// masks and the (tau/sigma) I proximal term. Self-adjoint and positive
// definite with Rayleigh floor tau/sigma.
class NewtonOperator {
 public:
  NewtonOperator(const ProblemData& pd, double sigma, double tau);

  int dim() const { return mt_ * nt_ + m_ + n_; }
  double sigma() const { return sigma_; }
  double tau() const { return tau_; }

  // H d without materializing a matrix.
  DualPoint apply(const DualPoint& d) const;
  Vector apply_vec(const Vector& d) const;

  Matrix dense() const;     // structured assembly for direct factorization
  Vector diagonal() const;  // Jacobi preconditioner

  Vector flatten(const DualPoint& d) const;
  DualPoint unflatten(const Vector& d) const;

  // filled by assemble_operator
  Matrix Dmask;                       // m x n entrywise coefficients
  struct Spike {                      // rank-one term coef * w w^T on one group
    double coef;
    std::vector<int> idx;             // column-major indices into the coupling matrix
    std::vector<double> val;          // unit-direction entries
  };
  std::vector<Spike> spikes;
  Vector theta_y, theta_z;            // cone masks (all-zero for the zero cone)

 private:
  const ProblemData* pd_;
  double sigma_, tau_;
  int m_, n_, mt_, nt_;
};

NewtonOperator assemble_operator(const ALParams& ap, const DualPoint& dp, const ProblemData& pd);

struct LinSolveResult {
  DualPoint d;
  double achieved_residual = 0.0;
  bool used_cg = false;
  bool cg_stalled = false;
  int cg_iters = 0;
};

// Solve H d = -g to within min(eta_bar, ||g||^{1+gamma}); direct Cholesky
// below dense_threshold, Jacobi-preconditioned CG above (or on fallback).
LinSolveResult solve_newton_system(const NewtonOperator& H, const DualPoint& g,
                                   const SsnConfig& cfg);

struct NonDescentDirection : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MaxBacktracks : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Armijo backtracking on Psi; returns the accepted step and the new point.
std::pair<double, DualPoint> line_search(const ALParams& ap, const DualPoint& dp,
                                         const DualPoint& grad, const DualPoint& dir,
                                         const SsnConfig& cfg, const ProblemData& pd,
                                         double psi0, int* backtracks = nullptr);

struct SsnStats {
  int iterations = 0;
  int linear_systems = 0;
  long cg_iterations = 0;
  int backtracks = 0;
  bool hit_max_iters = false;
  bool line_search_bailout = false;
  std::vector<double> grad_norms;  // ||grad Psi|| after each accepted step (index 0 = start)
};

std::pair<DualPoint, SsnStats> ssn_solve(const ALParams& ap, const DualPoint& dp0,
                                         const ProblemData& pd, const SsnConfig& cfg,
                                         const std::function<bool(const DeltaTriple&)>& stop);

}  // namespace otpalm
