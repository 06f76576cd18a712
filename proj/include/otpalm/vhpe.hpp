#pragma once

#include <functional>
#include <optional>

#include "otpalm/types.hpp"

namespace otpalm {

// Maximal monotone operator description for the generic extragradient
// harness. Affine operators T(x) = G x + h (positive semidefinite symmetric
// part) carry exact resolvents and enlargement certificates; general
// operators supply an evaluation callback.
struct MonotoneOperatorSpec {
  int dim = 0;
  bool affine = false;
  Matrix G;
  Vector h;
  std::function<Vector(const Vector&)> eval;
  std::function<Vector(double c, const Matrix& M, const Vector& x)> resolvent;
  std::optional<Vector> known_zero;

  static MonotoneOperatorSpec make_affine(Matrix G, Vector h);
  bool monotone_on_samples(int samples = 32, unsigned seed = 0) const;
};

struct MetricSequence {
  std::function<double(int)> c = [](int) { return 1.0; };
  std::function<Matrix(int)> M;
  std::function<double(int)> eta = [](int) { return 0.0; };

  static MetricSequence constant(double c_val, Matrix M0);
  // Assumption audit over the first K indices: c_k bounded away from zero,
  // M_k symmetric positive definite with (1+eta_k)^{-1} M_k <= M_{k+1}.
  bool audit(int K) const;
};

struct VhpeTriplet {
  Vector x_tilde;
  Vector d;
  double eps = 0.0;
};

using InexactOracle =
    std::function<VhpeTriplet(int k, const Vector& x, double c, const Matrix& M, double rho)>;

struct CriterionViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RateUndefined : std::domain_error {
  using std::domain_error::domain_error;
};

struct VhpeStepResult {
  Vector x_next, x_tilde, d;
  double eps = 0.0;
};

// One extragradient step: obtain a triplet from the oracle, re-verify the
// relative criterion (and enlargement membership for affine specs), then
// move x_{k+1} = x_k - c_k M_k d.
VhpeStepResult vhpe_step(const MonotoneOperatorSpec& spec, const MetricSequence& metric, int k,
                         const Vector& x_k, double rho, const InexactOracle& oracle);

struct VhpeTrajectory {
  std::vector<Vector> x;        // x^0 .. x^K
  std::vector<Vector> x_tilde;  // x~^1 .. x~^K
  std::vector<Vector> d;        // d^1 .. d^K
  std::vector<double> eps;
};

// Default oracle = exact resolvent (eps = 0).
VhpeTrajectory vhpe_solve(const MonotoneOperatorSpec& spec, const MetricSequence& metric,
                          const Vector& x0, double rho, int iters,
                          const InexactOracle& oracle = nullptr);

// r_k = dist_{M_{k+1}^{-1}}(x^{k+1}, omega) - (1+eta_k) dist_{M_k^{-1}}(x^k, omega).
std::vector<double> fejer_gap(const VhpeTrajectory& traj, const MetricSequence& metric,
                              const Vector& omega_point);

// Linear-rate coefficient mu_k; undefined once rho/(1-rho) reaches 1.
double rate_mu(double rho, double eta_k, double kappa, double lambda_lo, double c_k);

// Certificate d in T^eps(x_tilde) for affine specs, via minimizing the
// enlargement quadratic over the graph.
bool in_eps_enlargement(const MonotoneOperatorSpec& spec, const Vector& x_tilde, const Vector& d,
                        double eps, double tol = 1e-9);

}  // namespace otpalm
