#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace otpalm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Cones admitted for the row/column marginal slacks.
enum class ConeKind { Zero, NonnegOrthant };

enum class PresetKind { Classical, Partial, Martingale, Custom };

inline const char* to_string(ConeKind k) {
  return k == ConeKind::Zero ? "zero" : "nonneg";
}

inline const char* to_string(PresetKind p) {
  switch (p) {
    case PresetKind::Classical: return "classical";
    case PresetKind::Partial: return "partial";
    case PresetKind::Martingale: return "martingale";
    default: return "custom";
  }
}

// Partition of {0..m-1} x {0..n-1} into disjoint nonempty groups with
// per-group weights. Entries are (row, col) pairs kept in lexicographic
// order; flat column-major indices are cached for fast gather/scatter.
struct GroupPartition {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<std::pair<int, int>>> groups;
  Vector omega;

  // derived
  std::vector<std::vector<int>> flat;   // column-major linear indices per group
  std::vector<int> contig_start;        // >=0 when flat[g] is one contiguous run

  std::size_t group_count() const { return groups.size(); }

  static GroupPartition trivial(int m, int n);
  static GroupPartition from_groups(int m, int n,
                                    std::vector<std::vector<std::pair<int, int>>> groups,
                                    Vector omega);

  void rebuild_cache();
};

// Linear coupling AXB = S plus the two marginal cones.
struct ConstraintSet {
  Matrix A;  // mt x m
  Matrix B;  // n x nt
  Matrix S;  // mt x nt
  ConeKind cone_r = ConeKind::Zero;
  ConeKind cone_c = ConeKind::Zero;
  PresetKind preset = PresetKind::Custom;
  double partial_mass = 0.0;  // s of the partial preset

  int mt() const { return static_cast<int>(S.rows()); }
  int nt() const { return static_cast<int>(S.cols()); }
  bool has_coupling() const { return S.size() > 0; }
};

struct Regularizer {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  GroupPartition partition;
};

struct ProblemData {
  Matrix C;
  Vector alpha;
  Vector beta;
  ConstraintSet constraints;
  Regularizer reg;

  int m() const { return static_cast<int>(C.rows()); }
  int n() const { return static_cast<int>(C.cols()); }
};

struct PrimalPoint {
  Matrix X;
  Vector y;
  Vector z;

  static PrimalPoint zero(const ProblemData& pd) {
    return {Matrix::Zero(pd.m(), pd.n()), Vector::Zero(pd.m()), Vector::Zero(pd.n())};
  }
  double squaredNorm() const { return X.squaredNorm() + y.squaredNorm() + z.squaredNorm(); }
  double norm() const { return std::sqrt(squaredNorm()); }
};

struct DualPoint {
  Matrix W;  // mt x nt
  Vector u;  // m
  Vector v;  // n

  static DualPoint zero(const ProblemData& pd) {
    return {Matrix::Zero(pd.constraints.mt(), pd.constraints.nt()),
            Vector::Zero(pd.m()), Vector::Zero(pd.n())};
  }
  double squaredNorm() const { return W.squaredNorm() + u.squaredNorm() + v.squaredNorm(); }
  double norm() const { return std::sqrt(squaredNorm()); }
};

inline double dot(const DualPoint& a, const DualPoint& b) {
  return a.W.cwiseProduct(b.W).sum() + a.u.dot(b.u) + a.v.dot(b.v);
}

inline DualPoint operator+(const DualPoint& a, const DualPoint& b) {
  return {a.W + b.W, a.u + b.u, a.v + b.v};
}

inline DualPoint operator-(const DualPoint& a, const DualPoint& b) {
  return {a.W - b.W, a.u - b.u, a.v - b.v};
}

inline DualPoint operator*(double s, const DualPoint& a) {
  return {s * a.W, s * a.u, s * a.v};
}

// Validation diagnostic; validate() reports these instead of throwing.
struct Diagnostic {
  std::string code;
  std::string detail;
};

}  // namespace otpalm
