#include "otpalm/vhpe.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace otpalm {

MonotoneOperatorSpec MonotoneOperatorSpec::make_affine(Matrix G, Vector h) {
  MonotoneOperatorSpec spec;
  spec.dim = static_cast<int>(G.rows());
  spec.affine = true;
  spec.G = std::move(G);
  spec.h = std::move(h);
  spec.eval = [G = spec.G, h = spec.h](const Vector& x) { return Vector(G * x + h); };
  spec.resolvent = [G = spec.G, h = spec.h](double c, const Matrix& M, const Vector& x) {
    const auto d = G.rows();
    Matrix lhs = Matrix::Identity(d, d) + c * M * G;
    return Vector(lhs.partialPivLu().solve(x - c * M * h));
  };
  Eigen::FullPivLU<Matrix> lu(spec.G);
  if (lu.isInvertible()) spec.known_zero = Vector(-lu.solve(spec.h));
  return spec;
}

bool MonotoneOperatorSpec::monotone_on_samples(int samples, unsigned seed) const {
  if (affine) {
    Matrix sym = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    return es.eigenvalues().minCoeff() >= -1e-12;
  }
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < samples; ++t) {
    Vector a(dim), b(dim);
    for (int i = 0; i < dim; ++i) {
      a[i] = unif(eng);
      b[i] = unif(eng);
    }
    if ((eval(a) - eval(b)).dot(a - b) < -1e-12) return false;
  }
  return true;
}

MetricSequence MetricSequence::constant(double c_val, Matrix M0) {
  MetricSequence s;
  s.c = [c_val](int) { return c_val; };
  s.M = [M0 = std::move(M0)](int) { return M0; };
  return s;
}

bool MetricSequence::audit(int K) const {
  Matrix prev;
  for (int k = 0; k <= K; ++k) {
    if (!(c(k) > 0)) return false;
    Matrix Mk = M(k);
    if ((Mk - Mk.transpose()).norm() > 1e-12 * (1.0 + Mk.norm())) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(Mk);
    if (es.eigenvalues().minCoeff() <= 0) return false;
    if (k > 0) {
      // (1+eta_{k-1})^{-1} M_{k-1} <= M_k
      Matrix gap = Mk - prev / (1.0 + eta(k - 1));
      Eigen::SelfAdjointEigenSolver<Matrix> eg(0.5 * (gap + gap.transpose()));
      if (eg.eigenvalues().minCoeff() < -1e-12) return false;
    }
    prev = std::move(Mk);
  }
  return true;
}

namespace {

double weighted_sqnorm_inv(const Matrix& M, const Vector& v) {
  // ||v||^2_{M^{-1}} through one SPD solve
  return v.dot(M.ldlt().solve(v));
}

}  // namespace

bool in_eps_enlargement(const MonotoneOperatorSpec& spec, const Vector& x_tilde, const Vector& d,
                        double eps, double tol) {
  if (!spec.affine)
    throw std::logic_error("in_eps_enlargement: certified only for affine operators");
  // inf_y <G y + h - d, y - x_tilde> >= -eps; the infimum is a convex quadratic
  Matrix Gs = spec.G + spec.G.transpose();
  Vector rhs = spec.G.transpose() * x_tilde - spec.h + d;
  Eigen::LDLT<Matrix> ldlt(Gs);
  Vector ystar = ldlt.solve(rhs);
  if ((Gs * ystar - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) return false;  // unbounded below
  const double val = (spec.G * ystar + spec.h - d).dot(ystar - x_tilde);
  return val >= -eps - tol;
}

VhpeStepResult vhpe_step(const MonotoneOperatorSpec& spec, const MetricSequence& metric, int k,
                         const Vector& x_k, double rho, const InexactOracle& oracle) {
  const double c = metric.c(k);
  Matrix M = metric.M(k);
  VhpeTriplet t = oracle(k, x_k, c, M, rho);

  if (t.eps < 0) throw CriterionViolated("vhpe_step: negative enlargement parameter");
  if (spec.affine && !in_eps_enlargement(spec, t.x_tilde, t.d, t.eps))
    throw CriterionViolated("vhpe_step: triplet is not in the eps-enlargement of the operator");

  Vector lhs_vec = c * (M * t.d) + t.x_tilde - x_k;
  const double lhs = weighted_sqnorm_inv(M, lhs_vec) + 2.0 * c * t.eps;
  const double rhs = rho * rho * weighted_sqnorm_inv(M, t.x_tilde - x_k);
  if (lhs > rhs + 1e-12 * (1.0 + rhs))
    throw CriterionViolated("vhpe_step: relative criterion failed re-verification");

  VhpeStepResult out;
  out.x_next = x_k - c * (M * t.d);
  out.x_tilde = std::move(t.x_tilde);
  out.d = std::move(t.d);
  out.eps = t.eps;
  return out;
}

VhpeTrajectory vhpe_solve(const MonotoneOperatorSpec& spec, const MetricSequence& metric,
                          const Vector& x0, double rho, int iters, const InexactOracle& oracle) {
  InexactOracle orc = oracle;
  if (!orc) {
    orc = [&spec](int, const Vector& x, double c, const Matrix& M, double) {
      VhpeTriplet t;
      t.x_tilde = spec.resolvent(c, M, x);
      t.d = spec.eval(t.x_tilde);
      t.eps = 0.0;
      return t;
    };
  }
  VhpeTrajectory traj;
  traj.x.push_back(x0);
  Vector x = x0;
  for (int k = 0; k < iters; ++k) {
    VhpeStepResult s = vhpe_step(spec, metric, k, x, rho, orc);
    x = s.x_next;
    traj.x.push_back(x);
    traj.x_tilde.push_back(std::move(s.x_tilde));
    traj.d.push_back(std::move(s.d));
    traj.eps.push_back(s.eps);
  }
  return traj;
}

std::vector<double> fejer_gap(const VhpeTrajectory& traj, const MetricSequence& metric,
                              const Vector& omega_point) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < traj.x.size(); ++k) {
    const int ki = static_cast<int>(k);
    const double next = std::sqrt(weighted_sqnorm_inv(metric.M(ki + 1), traj.x[k + 1] - omega_point));
    const double cur = std::sqrt(weighted_sqnorm_inv(metric.M(ki), traj.x[k] - omega_point));
    out.push_back(next - (1.0 + metric.eta(ki)) * cur);
  }
  return out;
}

double rate_mu(double rho, double eta_k, double kappa, double lambda_lo, double c_k) {
  if (rho < 0 || rho >= 1) throw RateUndefined("rate_mu: rho must lie in [0, 1)");
  const double r = rho / (1.0 - rho);
  if (1.0 - r <= 0) throw RateUndefined("rate_mu: rho/(1-rho) reaches 1 (rho >= 1/2)");
  const double tail = (1.0 + r) * kappa / std::sqrt(kappa * kappa + lambda_lo * lambda_lo * c_k * c_k);
  return (1.0 + eta_k) / (1.0 - r) * (r + tail);
}

}  // namespace otpalm
