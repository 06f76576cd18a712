#include "otpalm/prox.hpp"

#include <cmath>

namespace otpalm {

namespace detail {

Vector gather_group(const GroupPartition& part, std::size_t g, const Matrix& X) {
  const auto& idx = part.flat[g];
  Vector out(static_cast<Eigen::Index>(idx.size()));
  const double* x = X.data();
  if (part.contig_start[g] >= 0) {
    out = Eigen::Map<const Vector>(x + part.contig_start[g], out.size());
  } else {
    for (std::size_t t = 0; t < idx.size(); ++t) out[static_cast<Eigen::Index>(t)] = x[idx[t]];
  }
  return out;
}

void scatter_group(const GroupPartition& part, std::size_t g, const Vector& xG, Matrix& X) {
  const auto& idx = part.flat[g];
  double* x = X.data();
  if (part.contig_start[g] >= 0) {
    Eigen::Map<Vector>(x + part.contig_start[g], xG.size()) = xG;
  } else {
    for (std::size_t t = 0; t < idx.size(); ++t) x[idx[t]] = xG[static_cast<Eigen::Index>(t)];
  }
}

}  // namespace detail

Vector prox_norm(double zeta, const Vector& x) {
  const double nx = x.norm();
  if (nx <= zeta) return Vector::Zero(x.size());
  return (1.0 - zeta / nx) * x;
}

Vector prox_group(const ProxParams& pp, const Vector& xG) {
  const double denom = pp.sigma * pp.lambda2 + 1.0;
  Vector w = xG.cwiseMax(0.0) / denom;
  const double zeta = pp.sigma * pp.lambda1 * pp.omega / denom;
  if (zeta <= 0.0) return w;
  return prox_norm(zeta, w);
}

Matrix prox_p(double sigma, const Regularizer& reg, const Matrix& X) {
  const double denom = sigma * reg.lambda2 + 1.0;
  if (reg.lambda1 <= 0.0) return X.cwiseMax(0.0) / denom;
  Matrix out(X.rows(), X.cols());
  const auto& part = reg.partition;
  for (std::size_t g = 0; g < part.groups.size(); ++g) {
    ProxParams pp{sigma, reg.lambda1, reg.lambda2, part.omega[static_cast<Eigen::Index>(g)]};
    detail::scatter_group(part, g, prox_group(pp, detail::gather_group(part, g, X)), out);
  }
  return out;
}

Vector prox_cone(ConeKind kind, double /*sigma*/, const Vector& w) {
  if (kind == ConeKind::Zero) return Vector::Zero(w.size());
  return w.cwiseMax(0.0);
}

Vector GroupJacobian::apply(const Vector& e) const {
  if (is_zero_map()) return Vector::Zero(e.size());
  Vector out(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) out[i] = theta[static_cast<std::size_t>(i)] ? e[i] : 0.0;
  out *= scale * a;
  if (b != 0.0) out += (scale * b * w.dot(e)) * w;  // w is supported on theta == 1
  return out;
}

Matrix GroupJacobian::dense() const {
  const auto sz = static_cast<Eigen::Index>(theta.size());
  Matrix J = Matrix::Zero(sz, sz);
  if (is_zero_map()) return J;
  for (Eigen::Index i = 0; i < sz; ++i)
    if (theta[static_cast<std::size_t>(i)]) J(i, i) = scale * a;
  if (b != 0.0) J += (scale * b) * (w * w.transpose());
  return J;
}

double GroupJacobian::diag(int i) const {
  if (is_zero_map() || !theta[static_cast<std::size_t>(i)]) return 0.0;
  double d = scale * a;
  if (b != 0.0) d += scale * b * w[i] * w[i];
  return d;
}

GroupJacobian jac_group(const ProxParams& pp, const Vector& xG) {
  GroupJacobian J;
  const double denom = pp.sigma * pp.lambda2 + 1.0;
  J.scale = 1.0 / denom;
  J.theta.resize(static_cast<std::size_t>(xG.size()));
  for (Eigen::Index i = 0; i < xG.size(); ++i)
    J.theta[static_cast<std::size_t>(i)] = xG[i] > 0.0 ? 1 : 0;

  const double zeta = pp.sigma * pp.lambda1 * pp.omega / denom;
  if (zeta <= 0.0) {
    J.kind = GroupJacobian::Kind::Interior;
    J.a = 1.0;
    return J;
  }
  Vector wt = xG.cwiseMax(0.0) / denom;
  const double nw = wt.norm();
  const double tol = 1e-14 * (1.0 + nw);
  if (std::abs(nw - zeta) <= tol) {
    J.kind = GroupJacobian::Kind::Boundary;
    J.chi = 0.0;
  } else if (nw < zeta) {
    J.kind = GroupJacobian::Kind::Zero;
  } else {
    J.kind = GroupJacobian::Kind::Interior;
    J.a = 1.0 - zeta / nw;
    J.b = zeta / nw;
    J.w = wt / nw;
  }
  return J;
}

namespace {

// Per-group conjugate of lambda1 omega ||.|| + (lambda2/2)||.||^2 + indicator(>=0).
ConjValue conj_group(double lambda1, double lambda2, double omega, const Vector& zG) {
  const double l1w = lambda1 * omega;
  if (lambda2 > 0.0) {
    // attained sup: xhat = prox of the norm-plus-indicator part at 1/lambda2
    ProxParams pp{1.0 / lambda2, lambda1, 0.0, omega};
    Vector xhat = prox_group(pp, zG / lambda2);
    const double pval = l1w * xhat.norm() + 0.5 * lambda2 * xhat.squaredNorm();
    return {zG.dot(xhat) - pval, 0.0};
  }
  const double pos = zG.cwiseMax(0.0).norm();
  if (l1w > 0.0) return {0.0, std::max(pos - l1w, 0.0)};
  return {0.0, pos};
}

}  // namespace

ConjValue conj_p(const Regularizer& reg, const Matrix& Z) {
  const auto& part = reg.partition;
  double value = 0.0, dist_sq = 0.0;
  if (reg.lambda1 <= 0.0) {
    // group structure is immaterial; evaluate over the whole matrix at once
    ConjValue c = conj_group(0.0, reg.lambda2, 1.0,
                             Eigen::Map<const Vector>(Z.data(), Z.size()));
    return c;
  }
  for (std::size_t g = 0; g < part.groups.size(); ++g) {
    ConjValue c = conj_group(reg.lambda1, reg.lambda2,
                             part.omega[static_cast<Eigen::Index>(g)],
                             detail::gather_group(part, g, Z));
    value += c.value;
    dist_sq += c.domain_distance * c.domain_distance;
  }
  return {value, std::sqrt(dist_sq)};
}

}  // namespace otpalm
