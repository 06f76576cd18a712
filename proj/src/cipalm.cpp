#include "otpalm/cipalm.hpp"

#include <chrono>
#include <cmath>

namespace otpalm {

std::pair<double, double> schedule_values(const Schedules& s, int k) {
  double tau = s.tau0;
  for (int i = 0; i < k; ++i) tau *= s.tau_growth(i);
  return {tau, s.sigma(k)};
}

bool check_inexact(const InexactPolicy& policy, int k, const ALParams& ap,
                   const DeltaTriple& dt) {
  const double lhs = dt.delta.norm();
  const double pref = std::min(std::sqrt(ap.tau), 1.0) / ap.sigma;
  const double mixed =
      std::sqrt(ap.tau * dt.delta_d.squaredNorm() + dt.delta_p.squaredNorm());
  switch (policy.kind) {
    case InexactPolicy::Kind::Relative:
      return lhs <= pref * policy.rho * mixed;
    case InexactPolicy::Kind::AbsoluteA:
      return lhs <= pref * policy.eps(k);
    case InexactPolicy::Kind::AbsoluteB:
      return lhs <= pref * policy.delta(k) * mixed;
    case InexactPolicy::Kind::AbsoluteAB:
      return lhs <= pref * policy.eps(k) && lhs <= pref * policy.delta(k) * mixed;
  }
  return false;
}

std::pair<DualPoint, PrimalPoint> correction_step(const ALParams& ap, const DualPoint& dp_tilde,
                                                  const PrimalPoint& pt_tilde,
                                                  const ProblemData& pd, bool apply_correction) {
  if (!apply_correction) return {dp_tilde, pt_tilde};
  const double step = ap.sigma / ap.tau;
  const auto& cs = pd.constraints;
  DualPoint next;
  next.W = cs.has_coupling()
               ? Matrix(ap.anchor_dual.W - step * (cs.A * pt_tilde.X * cs.B - cs.S))
               : Matrix::Zero(cs.mt(), cs.nt());
  next.u = ap.anchor_dual.u - step * (pt_tilde.X.rowwise().sum() + pt_tilde.y - pd.alpha);
  next.v = ap.anchor_dual.v -
           step * (pt_tilde.X.colwise().sum().transpose() + pt_tilde.z - pd.beta);
  return {std::move(next), pt_tilde};
}

SolveReport solve(const ProblemData& pd, const SolverConfig& cfg,
                  std::optional<std::pair<DualPoint, PrimalPoint>> init) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  {
    auto diags = validate(pd);
    if (!diags.empty())
      throw std::invalid_argument("solve: invalid problem data (" + diags.front().code + ": " +
                                  diags.front().detail + ")");
  }

  SolveReport rep;
  ScaledInstance sc;
  if (cfg.data_scaling) {
    sc = scale_instance(pd);
  } else {
    sc.pd = pd;
  }
  const ProblemData& work = sc.pd;

  DualPoint dual = DualPoint::zero(work);
  PrimalPoint primal = PrimalPoint::zero(work);
  if (init.has_value()) {
    dual = init->first;
    primal = init->second;
    if (cfg.data_scaling) {
      dual.W /= sc.dual_scale; dual.u /= sc.dual_scale; dual.v /= sc.dual_scale;
      primal.X /= sc.primal_scale; primal.y /= sc.primal_scale; primal.z /= sc.primal_scale;
    }
  } else if (cfg.warm_start.has_value()) {
    const auto tw = clock::now();
    // warm-start termination measured in original units
    ResidualFn original_eta = [&](const PrimalPoint& pt, const DualPoint& dp) {
      if (!cfg.data_scaling) return kkt_residuals(pd, pt, dp).eta;
      PrimalPoint p2{sc.primal_scale * pt.X, sc.primal_scale * pt.y, sc.primal_scale * pt.z};
      DualPoint d2{sc.dual_scale * dp.W, sc.dual_scale * dp.u, sc.dual_scale * dp.v};
      return kkt_residuals(pd, p2, d2).eta;
    };
    WarmStartResult ws = warm_start(work, *cfg.warm_start, original_eta);
    rep.warmstart_seconds = std::chrono::duration<double>(clock::now() - tw).count();
    rep.warmstart_iters = ws.iterations;
    dual = std::move(ws.dual);
    primal = std::move(ws.primal);
  }

  // residuals are always evaluated against the original data
  auto residuals_at = [&](const PrimalPoint& pt, const DualPoint& dp) {
    if (!cfg.data_scaling) return kkt_residuals(pd, pt, dp);
    PrimalPoint p2{sc.primal_scale * pt.X, sc.primal_scale * pt.y, sc.primal_scale * pt.z};
    DualPoint d2{sc.dual_scale * dp.W, sc.dual_scale * dp.u, sc.dual_scale * dp.v};
    return kkt_residuals(pd, p2, d2);
  };
  auto unscale = [&](SolveReport& r, const PrimalPoint& pt, const DualPoint& dp) {
    if (!cfg.data_scaling) {
      r.primal = pt;
      r.dual = dp;
    } else {
      r.primal = {sc.primal_scale * pt.X, sc.primal_scale * pt.y, sc.primal_scale * pt.z};
      r.dual = {sc.dual_scale * dp.W, sc.dual_scale * dp.u, sc.dual_scale * dp.v};
    }
  };

  ResidualReport rr = residuals_at(primal, dual);
  rep.initial_eta = rr.eta;
  double best_eta = rr.eta;
  PrimalPoint best_primal = primal;
  DualPoint best_dual = dual;
  ResidualReport best_rr = rr;

  if (rr.eta < cfg.tol) {
    rep.status = SolveStatus::Converged;
    rep.final_residuals = rr;
    unscale(rep, primal, dual);
    rep.solve_seconds = elapsed();
    return rep;
  }

  double tau = cfg.schedules.tau0;
  for (int k = 0; k < cfg.maxiter; ++k) {
    const double sigma = cfg.schedules.sigma(k);
    ALParams ap{sigma, tau, primal, dual};

    auto stop = [&](const DeltaTriple& dt) { return check_inexact(cfg.policy, k, ap, dt); };
    auto [dp_tilde, stats] = ssn_solve(ap, dual, work, cfg.ssn, stop);
    rep.inner_hit_max = rep.inner_hit_max || stats.hit_max_iters;

    auto [dt, pt_tilde] = delta_residuals(ap, dp_tilde, work);
    auto [dual_next, primal_next] =
        correction_step(ap, dp_tilde, pt_tilde, work, cfg.apply_correction);

    if (cfg.record_iterates)
      rep.iterates.push_back({primal, pt_tilde, dual, dp_tilde, sigma, tau});

    primal = std::move(primal_next);
    dual = std::move(dual_next);
    rr = residuals_at(primal, dual);

    rep.outer_iters = k + 1;
    rep.linear_systems_solved += stats.linear_systems;
    rep.history.push_back({rr.eta, rr.eta_X, rr.eta_y, rr.eta_z, rr.eta_feas, rr.eta_gap,
                           rr.pobj, rr.dobj, sigma, tau, stats.iterations, stats.linear_systems,
                           dt.delta.norm(), dt.delta_p.norm(), dt.delta_d.norm()});

    if (rr.eta < best_eta) {
      best_eta = rr.eta;
      best_primal = primal;
      best_dual = dual;
      best_rr = rr;
    }

    if (rr.eta < cfg.tol) {
      rep.status = SolveStatus::Converged;
      rep.final_residuals = rr;
      unscale(rep, primal, dual);
      rep.solve_seconds = elapsed();
      return rep;
    }
    if (elapsed() > cfg.max_time_sec) {
      rep.status = SolveStatus::TimeOut;
      rep.final_residuals = best_rr;
      unscale(rep, best_primal, best_dual);
      rep.solve_seconds = elapsed();
      return rep;
    }
    tau *= cfg.schedules.tau_growth(k);
  }

  rep.status = SolveStatus::MaxIter;
  rep.final_residuals = best_rr;
  unscale(rep, best_primal, best_dual);
  rep.solve_seconds = elapsed();
  return rep;
}

}  // namespace otpalm
