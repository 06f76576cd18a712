#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "otpalm/cipalm.hpp"
#include "otpalm/instance_gen.hpp"
#include "otpalm/io.hpp"
#include "otpalm/oracle.hpp"

namespace {

using namespace otpalm;

int worker_count() {
  if (const char* env = std::getenv("OTPALM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct SolveFlags {
  double rho = 0.01;
  double tol = 1e-6;
  int maxiter = 1000;
  double maxtime_sec = 0.0;  // 0 = unlimited
  std::string policy = "relative";
  double eps0 = 1.0, delta0 = 1.0;
  double p = 1.1, q = 1.1;
  bool no_correction = false;
  bool no_warmstart = false;
  bool no_scaling = false;
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--rho", f.rho, "relative-criterion tolerance");
  cmd->add_option("--tol", f.tol, "termination residual");
  cmd->add_option("--maxiter", f.maxiter, "outer iteration cap");
  cmd->add_option("--maxtime-sec", f.maxtime_sec, "wall-clock cap in seconds (0 = none)");
  cmd->add_option("--policy", f.policy, "relative | absA | absB | absAB")
      ->check(CLI::IsMember({"relative", "absA", "absB", "absAB"}));
  cmd->add_option("--eps0", f.eps0, "eps_k = eps0/(k+1)^p for the absolute criteria");
  cmd->add_option("--delta0", f.delta0, "delta_k = delta0/(k+1)^q");
  cmd->add_option("--p", f.p, "exponent of eps_k");
  cmd->add_option("--q", f.q, "exponent of delta_k");
  cmd->add_flag("--no-correction", f.no_correction, "keep the trial multipliers (experimental)");
  cmd->add_flag("--no-warmstart", f.no_warmstart, "skip the dual ADMM warm start");
  cmd->add_flag("--no-scaling", f.no_scaling, "iterate on unscaled data");
}

SolverConfig make_config(const SolveFlags& f) {
  SolverConfig cfg;
  if (f.policy == "relative")
    cfg.policy = InexactPolicy::relative(f.rho);
  else if (f.policy == "absA")
    cfg.policy = InexactPolicy::absolute_a(f.eps0, f.p);
  else if (f.policy == "absB")
    cfg.policy = InexactPolicy::absolute_b(f.delta0, f.q);
  else
    cfg.policy = InexactPolicy::absolute_ab(f.eps0, f.p, f.delta0, f.q);
  cfg.tol = f.tol;
  cfg.maxiter = f.maxiter;
  if (f.maxtime_sec > 0) cfg.max_time_sec = f.maxtime_sec;
  cfg.apply_correction = !f.no_correction;
  if (!f.no_warmstart) cfg.warm_start = AdmmConfig{};
  cfg.data_scaling = !f.no_scaling;
  return cfg;
}

std::string policy_descriptor(const SolveFlags& f) {
  if (f.policy == "relative") return "relative rho=" + format_double(f.rho);
  if (f.policy == "absA") return "absA eps0=" + format_double(f.eps0) + " p=" + format_double(f.p);
  if (f.policy == "absB")
    return "absB delta0=" + format_double(f.delta0) + " q=" + format_double(f.q);
  return "absAB eps0=" + format_double(f.eps0) + " p=" + format_double(f.p) +
         " delta0=" + format_double(f.delta0) + " q=" + format_double(f.q);
}

void append_csv(const std::string& path, const RunRecord& r) {
  const bool fresh = !std::ifstream(path).good();
  std::ofstream out(path, std::ios::app);
  if (fresh) out << run_record_csv_header() << '\n';
  out << run_record_csv_row(r) << '\n';
}

int cmd_gen(const std::string& family, int m, int n, int m1, double lambda1, double lambda2,
            std::uint64_t seed, const std::string& out_path) {
  GenSpec spec;
  if (family == "classical")
    spec.family = GenSpec::Family::Classical;
  else if (family == "martingale")
    spec.family = GenSpec::Family::Martingale;
  else
    spec.family = GenSpec::Family::GroupDA;
  spec.m = m;
  spec.n = n;
  spec.m1 = m1;
  spec.lambda1 = lambda1;
  spec.lambda2 = lambda2;
  spec.seed = seed;
  ProblemData pd = generate(spec);
  save_instance(pd, out_path);
  nlohmann::json digest;
  digest["file"] = out_path;
  digest["family"] = family;
  digest["m"] = pd.m();
  digest["n"] = pd.n();
  digest["preset"] = to_string(pd.constraints.preset);
  digest["groups"] = pd.reg.partition.groups.size();
  digest["lambda1"] = pd.reg.lambda1;
  digest["lambda2"] = pd.reg.lambda2;
  digest["seed"] = seed;
  std::cout << digest.dump() << "\n";
  return 0;
}

int cmd_solve(const std::string& instance_path, const SolveFlags& flags,
              const std::string& dump_path, const std::string& csv_path, bool strict) {
  ProblemData pd = load_instance(instance_path);
  SolveReport rep = solve(pd, make_config(flags));
  RunRecord rec = make_run_record(instance_path, pd, rep, policy_descriptor(flags));
  std::cout << run_record_to_json(rec).dump() << "\n";
  if (!csv_path.empty()) append_csv(csv_path, rec);
  if (!dump_path.empty()) {
    nlohmann::json sol;
    sol["X"] = std::vector<double>(rep.primal.X.data(), rep.primal.X.data() + rep.primal.X.size());
    sol["y"] = std::vector<double>(rep.primal.y.data(), rep.primal.y.data() + rep.primal.y.size());
    sol["z"] = std::vector<double>(rep.primal.z.data(), rep.primal.z.data() + rep.primal.z.size());
    sol["u"] = std::vector<double>(rep.dual.u.data(), rep.dual.u.data() + rep.dual.u.size());
    sol["v"] = std::vector<double>(rep.dual.v.data(), rep.dual.v.data() + rep.dual.v.size());
    sol["W"] = std::vector<double>(rep.dual.W.data(), rep.dual.W.data() + rep.dual.W.size());
    sol["column_major"] = true;
    std::ofstream out(dump_path);
    out << sol.dump() << "\n";
  }
  if (strict && rep.status != SolveStatus::Converged) return 3;
  return 0;
}

int cmd_bench(const std::vector<std::string>& instances, const std::string& sweep,
              const SolveFlags& base, const std::string& out_csv) {
  struct Task {
    std::size_t order;
    std::string instance;
    SolveFlags flags;
  };
  std::vector<Task> tasks;
  const std::vector<double> rhos = {8e-1, 4e-1, 1e-1, 8e-2, 4e-2, 1e-2, 8e-3, 4e-3, 1e-3, 8e-4};
  const std::vector<double> heads = {1.0, 1e-3};
  const std::vector<double> exps = {1.1, 2.1, 3.1};
  for (const auto& inst : instances) {
    if (sweep == "rho" || sweep == "both") {
      for (double rho : rhos) {
        SolveFlags f = base;
        f.policy = "relative";
        f.rho = rho;
        tasks.push_back({tasks.size(), inst, f});
      }
    }
    if (sweep == "grid" || sweep == "both") {
      for (double head : heads)
        for (double p : exps)
          for (double q : exps) {
            SolveFlags f = base;
            f.policy = "absAB";
            f.eps0 = head;
            f.delta0 = head;
            f.p = p;
            f.q = q;
            tasks.push_back({tasks.size(), inst, f});
          }
    }
  }

  std::vector<RunRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& t = tasks[i];
      ProblemData pd = load_instance(t.instance);
      SolveReport rep = solve(pd, make_config(t.flags));
      records[t.order] = make_run_record(t.instance, pd, rep, policy_descriptor(t.flags));
    }
  };
  const int nw = std::min<int>(worker_count(), static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_csv.empty()) {
    file.open(out_csv);
    os = &file;
  }
  // merged in sweep order, shaped like the criterion-sensitivity tables
  *os << "instance,policy,rho,eps0,p,delta0,q,outer_iters,linear_systems,time_sec,eta,status\n";
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const auto& r = records[i];
    const bool rel = t.flags.policy == "relative";
    *os << t.instance << ',' << t.flags.policy << ','
        << (rel ? format_double(t.flags.rho) : std::string()) << ','
        << (rel ? std::string() : format_double(t.flags.eps0)) << ','
        << (rel ? std::string() : format_double(t.flags.p)) << ','
        << (rel ? std::string() : format_double(t.flags.delta0)) << ','
        << (rel ? std::string() : format_double(t.flags.q)) << ',' << r.outer_iters << ','
        << r.linear_systems << ',' << format_double(r.time_sec) << ',' << format_double(r.eta)
        << ',' << r.status << "\n";
  }
  return 0;
}

int cmd_export_socp(const std::string& instance_path, const std::string& out_path,
                    bool require_cones) {
  ProblemData pd = load_instance(instance_path);
  try {
    export_socp_file(pd, out_path, require_cones);
  } catch (const DegenerateCones& e) {
    std::cerr << e.what() << "\n";
    return 4;
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_check(const std::string& instance_path, const SolveFlags& flags) {
  ProblemData pd = load_instance(instance_path);
  SolveReport rep = solve(pd, make_config(flags));

  double ref = 0.0;
  double tol = 0.0;
  std::string oracle_name;
  if (pd.reg.lambda1 == 0.0 && pd.reg.lambda2 == 0.0) {
    LpSolution lp = lp_oracle(pd);
    ref = lp.objective;
    tol = 1e-6;
    oracle_name = lp.exact ? "lp-vertex" : "lp-admm";
  } else if (pd.reg.lambda2 > 0.0) {
    RegSolution rs = reg_oracle(pd);
    ref = rs.objective;
    tol = 1e-5 * (1.0 + std::abs(rs.objective));
    oracle_name = "reg-apg";
  } else {
    std::cerr << "check: no oracle covers lambda1 > 0 with lambda2 = 0\n";
    return 2;
  }

  const double delta = std::abs(rep.final_residuals.pobj - ref);
  const bool pass = rep.status == SolveStatus::Converged && delta <= tol;
  std::cout << (pass ? "PASS" : "FAIL") << " oracle=" << oracle_name
            << " pobj=" << format_double(rep.final_residuals.pobj)
            << " ref=" << format_double(ref) << " delta=" << format_double(delta)
            << " tol=" << format_double(tol) << " status=" << to_string(rep.status) << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-quadratic regularized optimal transport solver"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a seeded instance file");
  std::string family = "classical", gen_out = "instance.json";
  int gm = 0, gn = 0, gm1 = 0;
  double gl1 = 0.0, gl2 = 0.0;
  std::uint64_t gseed = 0;
  gen->add_option("--family", family, "classical | martingale | groupda")
      ->check(CLI::IsMember({"classical", "martingale", "groupda"}));
  gen->add_option("--m", gm, "source size")->required();
  gen->add_option("--n", gn, "target size (martingale: pre-supremum sample count)")->required();
  gen->add_option("--m1", gm1, "groupda: first-class size (0 = ceil(m/2))");
  gen->add_option("--lambda1", gl1, "group weight");
  gen->add_option("--lambda2", gl2, "quadratic weight");
  gen->add_option("--seed", gseed, "rng seed");
  gen->add_option("-o,--output", gen_out, "output path");

  // solve
  auto* slv = app.add_subcommand("solve", "solve an instance file");
  std::string slv_instance, dump_path, csv_path;
  bool strict = false;
  SolveFlags sflags;
  slv->add_option("instance", slv_instance, "instance json")->required();
  add_solve_flags(slv, sflags);
  slv->add_option("--dump-solution", dump_path, "write the primal/dual solution as json");
  slv->add_option("--csv", csv_path, "append the run record to this csv");
  slv->add_flag("--strict", strict, "exit 3 unless converged");

  // bench
  auto* bench = app.add_subcommand("bench", "criterion-sensitivity sweeps");
  std::vector<std::string> bench_instances;
  std::string sweep = "rho", bench_out;
  SolveFlags bflags;
  bench->add_option("instances", bench_instances, "instance files")->required();
  bench->add_option("--sweep", sweep, "rho | grid | both")
      ->check(CLI::IsMember({"rho", "grid", "both"}));
  add_solve_flags(bench, bflags);
  bench->add_option("-o,--output", bench_out, "csv output path (default stdout)");

  // export-socp
  auto* soc = app.add_subcommand("export-socp", "write the cone-program text form");
  std::string soc_instance, soc_out = "instance.socp";
  bool require_cones = false;
  soc->add_option("instance", soc_instance, "instance json")->required();
  soc->add_option("-o,--output", soc_out, "output path");
  soc->add_flag("--require-cones", require_cones, "fail when lambda1 = lambda2 = 0");

  // check
  auto* chk = app.add_subcommand("check", "cross-check against the reference oracles");
  std::string chk_instance;
  SolveFlags cflags;
  chk->add_option("instance", chk_instance, "instance json")->required();
  add_solve_flags(chk, cflags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(family, gm, gn, gm1, gl1, gl2, gseed, gen_out);
    if (slv->parsed()) return cmd_solve(slv_instance, sflags, dump_path, csv_path, strict);
    if (bench->parsed()) return cmd_bench(bench_instances, sweep, bflags, bench_out);
    if (soc->parsed()) return cmd_export_socp(soc_instance, soc_out, require_cones);
    if (chk->parsed()) return cmd_check(chk_instance, cflags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
