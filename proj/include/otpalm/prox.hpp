#pragma once

#include "otpalm/types.hpp"

namespace otpalm {

struct ProxParams {
  double sigma = 1.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double omega = 1.0;  // omega_G of the group at hand
};

// prox of zeta*||.|| : block soft threshold max(1 - zeta/||x||, 0) * x.
Vector prox_norm(double zeta, const Vector& x);

// prox of sigma * (lambda1 omega ||.|| + (lambda2/2)||.||^2 + indicator(>=0)),
// evaluated through the chain prox_{zeta||.||}(P_+(x)/(sigma lambda2 + 1)).
Vector prox_group(const ProxParams& pp, const Vector& xG);

// Groupwise application over the whole coupling matrix.
Matrix prox_p(double sigma, const Regularizer& reg, const Matrix& X);

// Zero cone -> 0; nonnegative orthant -> componentwise max(w, 0).
Vector prox_cone(ConeKind kind, double sigma, const Vector& w);

// Surrogate generalized Jacobian element of prox_group at xG, stored as
// scale * (a * Diag(theta) + b * w w^T) with w the unit direction of the
// projected argument. Ties take theta = 0 and chi = 0 (Boundary kind maps
// to zero) so that inactive coordinates drop out of Newton systems.
struct GroupJacobian {
  enum class Kind { Zero, Boundary, Interior };
  Kind kind = Kind::Zero;
  double a = 0.0;       // Interior: 1 - zeta/||w~|| (1 when the norm part is off)
  double b = 0.0;       // Interior: zeta/||w~|| rank-one coefficient
  double chi = 0.0;     // Boundary parameter, canonically 0
  Vector w;             // unit direction, empty unless b != 0
  std::vector<char> theta;
  double scale = 1.0;   // 1/(sigma lambda2 + 1)

  Vector apply(const Vector& e) const;
  Matrix dense() const;
  double diag(int i) const;
  bool is_zero_map() const { return kind == Kind::Zero || kind == Kind::Boundary; }
};

GroupJacobian jac_group(const ProxParams& pp, const Vector& xG);

struct ConjValue {
  double value = 0.0;
  double domain_distance = 0.0;
};

// Conjugate p*(Z) summed over groups; outside dom p* the value at the
// projected argument is returned together with the projection distance.
ConjValue conj_p(const Regularizer& reg, const Matrix& Z);

namespace detail {
// Gather/scatter between a matrix and one group's coordinate vector.
Vector gather_group(const GroupPartition& part, std::size_t g, const Matrix& X);
void scatter_group(const GroupPartition& part, std::size_t g, const Vector& xG, Matrix& X);
}  // namespace detail

}  // namespace otpalm
