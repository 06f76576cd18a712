#pragma once

#include <functional>
#include <memory>

#include "otpalm/auglag.hpp"

namespace otpalm {

struct AdmmConfig {
  enum class Variant { dADMM, dSGSADMM };
  Variant variant = Variant::dSGSADMM;
  double sigma = 1.0;
  double gamma = 0.0;  // 0 -> default per variant (1.618 / 1.95)
  double tol = 1e-3;
  int max_iter = 500;
  bool adapt_sigma = false;  // residual balancing every 20 iterations
  int dense_threshold = 4000;
};

struct AdmmWorkspace;  // cached factorizations; rebuilt when sigma changes

struct AdmmState {
  DualPoint dual;            // (W, u, v)
  Matrix Xi;                 // auxiliary m x n block
  Vector zeta, xi;           // auxiliary slack blocks
  PrimalPoint mult;          // multipliers (X, y, z)
  double sigma = 1.0;
  double gamma = 1.618;
  int iter = 0;
  std::shared_ptr<const AdmmWorkspace> ws;

  static AdmmState init(const ProblemData& pd, const AdmmConfig& cfg);
};

AdmmState dadmm_step(const AdmmState& state, const ProblemData& pd);
AdmmState dsgsadmm_step(const AdmmState& state, const ProblemData& pd);

struct WarmStartResult {
  DualPoint dual;
  PrimalPoint primal;
  int iterations = 0;
  double final_eta = 0.0;
};

// Run the selected variant until the relative KKT residual drops below
// cfg.tol or cfg.max_iter is hit; any iterate is a usable start. A caller
// iterating on transformed data can pass its own residual functional (the
// outer solver uses this to stop on original-units residuals).
using ResidualFn = std::function<double(const PrimalPoint&, const DualPoint&)>;
WarmStartResult warm_start(const ProblemData& pd, const AdmmConfig& cfg = {},
                           const ResidualFn& residual = nullptr);

}  // namespace otpalm
