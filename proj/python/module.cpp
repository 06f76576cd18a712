#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otpalm/cipalm.hpp"
#include "otpalm/instance_gen.hpp"
#include "otpalm/io.hpp"
#include "otpalm/oracle.hpp"

namespace py = pybind11;
using namespace otpalm;

namespace {

SolverConfig config_from_kwargs(double rho, double tol, int maxiter, double maxtime_sec,
                                const std::string& policy, double eps0, double p, double delta0,
                                double q, bool correction, bool warmstart, bool scaling) {
  SolverConfig cfg;
  if (policy == "relative")
    cfg.policy = InexactPolicy::relative(rho);
  else if (policy == "absA")
    cfg.policy = InexactPolicy::absolute_a(eps0, p);
  else if (policy == "absB")
    cfg.policy = InexactPolicy::absolute_b(delta0, q);
  else if (policy == "absAB")
    cfg.policy = InexactPolicy::absolute_ab(eps0, p, delta0, q);
  else
    throw std::invalid_argument("policy must be relative | absA | absB | absAB");
  cfg.tol = tol;
  cfg.maxiter = maxiter;
  if (maxtime_sec > 0) cfg.max_time_sec = maxtime_sec;
  cfg.apply_correction = correction;
  if (warmstart) cfg.warm_start = AdmmConfig{};
  cfg.data_scaling = scaling;
  return cfg;
}

py::dict report_to_dict(const ProblemData& pd, const SolveReport& rep) {
  py::dict d;
  d["status"] = std::string(to_string(rep.status));
  d["outer_iters"] = rep.outer_iters;
  d["linear_systems"] = rep.linear_systems_solved;
  d["eta"] = rep.final_residuals.eta;
  d["eta_X"] = rep.final_residuals.eta_X;
  d["eta_y"] = rep.final_residuals.eta_y;
  d["eta_z"] = rep.final_residuals.eta_z;
  d["eta_feas"] = rep.final_residuals.eta_feas;
  d["eta_gap"] = rep.final_residuals.eta_gap;
  d["pobj"] = rep.final_residuals.pobj;
  d["dobj"] = rep.final_residuals.dobj;
  d["feas"] = primal_feasibility_measure(pd, rep.primal);
  d["initial_eta"] = rep.initial_eta;
  d["warmstart_iters"] = rep.warmstart_iters;
  d["solve_seconds"] = rep.solve_seconds;
  d["X"] = rep.primal.X;
  d["y"] = rep.primal.y;
  d["z"] = rep.primal.z;
  d["W"] = rep.dual.W;
  d["u"] = rep.dual.u;
  d["v"] = rep.dual.v;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "group-quadratic regularized optimal transport solver";

  py::class_<ProblemData>(m, "Problem")
      .def_property_readonly("m", &ProblemData::m)
      .def_property_readonly("n", &ProblemData::n)
      .def_property_readonly("cost", [](const ProblemData& pd) { return pd.C; })
      .def_property_readonly("alpha", [](const ProblemData& pd) { return pd.alpha; })
      .def_property_readonly("beta", [](const ProblemData& pd) { return pd.beta; })
      .def_property_readonly("lambda1", [](const ProblemData& pd) { return pd.reg.lambda1; })
      .def_property_readonly("lambda2", [](const ProblemData& pd) { return pd.reg.lambda2; })
      .def_property_readonly("preset",
                             [](const ProblemData& pd) {
                               return std::string(to_string(pd.constraints.preset));
                             })
      .def_property_readonly("group_count",
                             [](const ProblemData& pd) {
                               return pd.reg.partition.groups.size();
                             })
      .def("validate",
           [](const ProblemData& pd) {
             std::vector<std::pair<std::string, std::string>> out;
             for (const auto& d : validate(pd)) out.emplace_back(d.code, d.detail);
             return out;
           })
      .def("__repr__", [](const ProblemData& pd) {
        return "<otpalm.Problem " + std::to_string(pd.m()) + "x" + std::to_string(pd.n()) +
               " preset=" + to_string(pd.constraints.preset) + ">";
      });

  m.def("build_classical",
        [](Matrix C, Vector alpha, Vector beta, double lambda1, double lambda2) {
          Regularizer reg;
          reg.lambda1 = lambda1;
          reg.lambda2 = lambda2;
          return build_classical(std::move(C), std::move(alpha), std::move(beta), std::move(reg));
        },
        py::arg("cost"), py::arg("alpha"), py::arg("beta"), py::arg("lambda1") = 0.0,
        py::arg("lambda2") = 0.0);
  m.def("build_partial",
        [](Matrix C, Vector alpha, Vector beta, double s, double lambda1, double lambda2) {
          Regularizer reg;
          reg.lambda1 = lambda1;
          reg.lambda2 = lambda2;
          return build_partial(std::move(C), std::move(alpha), std::move(beta), s,
                               std::move(reg));
        },
        py::arg("cost"), py::arg("alpha"), py::arg("beta"), py::arg("s"),
        py::arg("lambda1") = 0.0, py::arg("lambda2") = 0.0);
  m.def("build_martingale",
        [](Matrix C, Vector alpha, Vector beta, Matrix P, Matrix Q) {
          return build_martingale(std::move(C), std::move(alpha), std::move(beta), std::move(P),
                                  std::move(Q), {});
        },
        py::arg("cost"), py::arg("alpha"), py::arg("beta"), py::arg("P"), py::arg("Q"));

  m.def("gen_classical", &gen_classical, py::arg("m"), py::arg("n"), py::arg("seed") = 0);
  m.def("gen_martingale", &gen_martingale, py::arg("m"), py::arg("n_prime"), py::arg("seed") = 0);
  m.def("gen_group_da",
        [](int m, int n, int m1, double lambda1, double lambda2, std::uint64_t seed) {
          return gen_group_da(m, n, m1, lambda1, lambda2, seed);
        },
        py::arg("m"), py::arg("n"), py::arg("m1") = 0, py::arg("lambda1") = 1.0,
        py::arg("lambda2") = 1.0, py::arg("seed") = 0);

  m.def("load_instance", &load_instance, py::arg("path"));
  m.def("save_instance", &save_instance, py::arg("problem"), py::arg("path"));

  m.def("solve",
        [](const ProblemData& pd, double rho, double tol, int maxiter, double maxtime_sec,
           const std::string& policy, double eps0, double p, double delta0, double q,
           bool correction, bool warmstart, bool scaling) {
          SolverConfig cfg = config_from_kwargs(rho, tol, maxiter, maxtime_sec, policy, eps0, p,
                                                delta0, q, correction, warmstart, scaling);
          return report_to_dict(pd, solve(pd, cfg));
        },
        py::arg("problem"), py::arg("rho") = 0.01, py::arg("tol") = 1e-6,
        py::arg("maxiter") = 1000, py::arg("maxtime_sec") = 0.0, py::arg("policy") = "relative",
        py::arg("eps0") = 1.0, py::arg("p") = 1.1, py::arg("delta0") = 1.0, py::arg("q") = 1.1,
        py::arg("correction") = true, py::arg("warmstart") = true, py::arg("scaling") = true);

  m.def("warm_start",
        [](const ProblemData& pd, double tol, int max_iter, const std::string& variant) {
          AdmmConfig cfg;
          cfg.tol = tol;
          cfg.max_iter = max_iter;
          cfg.variant = variant == "dADMM" ? AdmmConfig::Variant::dADMM
                                           : AdmmConfig::Variant::dSGSADMM;
          WarmStartResult ws = warm_start(pd, cfg);
          py::dict d;
          d["iterations"] = ws.iterations;
          d["eta"] = ws.final_eta;
          d["X"] = ws.primal.X;
          d["u"] = ws.dual.u;
          d["v"] = ws.dual.v;
          return d;
        },
        py::arg("problem"), py::arg("tol") = 1e-3, py::arg("max_iter") = 500,
        py::arg("variant") = "dSGSADMM");

  m.def("primal_objective",
        [](const ProblemData& pd, const Matrix& X) {
          return primal_objective(pd, {X, Vector::Zero(pd.m()), Vector::Zero(pd.n())});
        },
        py::arg("problem"), py::arg("X"));

  m.def("kkt_eta",
        [](const ProblemData& pd, const Matrix& X, const Vector& u, const Vector& v,
           const Matrix& W) {
          PrimalPoint pt{X, Vector::Zero(pd.m()), Vector::Zero(pd.n())};
          DualPoint dp{W, u, v};
          ResidualReport r = kkt_residuals(pd, pt, dp);
          py::dict d;
          d["eta"] = r.eta;
          d["eta_feas"] = r.eta_feas;
          d["eta_gap"] = r.eta_gap;
          d["pobj"] = r.pobj;
          d["dobj"] = r.dobj;
          return d;
        },
        py::arg("problem"), py::arg("X"), py::arg("u"), py::arg("v"),
        py::arg("W") = Matrix::Zero(0, 0));

  m.def("prox_norm", &prox_norm, py::arg("zeta"), py::arg("x"));
  m.def("prox_group",
        [](double sigma, double lambda1, double lambda2, double omega, const Vector& x) {
          return prox_group({sigma, lambda1, lambda2, omega}, x);
        },
        py::arg("sigma"), py::arg("lambda1"), py::arg("lambda2"), py::arg("omega"),
        py::arg("x"));

  m.def("barycentric_map",
        [](const Matrix& X, const Matrix& Q) {
          std::vector<py::object> out;
          for (auto& p : barycentric_map(X, Q))
            out.push_back(p.has_value() ? py::cast(*p) : py::none());
          return out;
        },
        py::arg("X"), py::arg("Q"));

  m.def("export_socp",
        [](const ProblemData& pd, const std::string& path, bool require_cones) {
          export_socp_file(pd, path, require_cones);
        },
        py::arg("problem"), py::arg("path"), py::arg("require_cones") = false);

  m.def("lp_oracle", [](const ProblemData& pd) {
    LpSolution s = lp_oracle(pd);
    py::dict d;
    d["X"] = s.X;
    d["objective"] = s.objective;
    d["exact"] = s.exact;
    return d;
  });
}
