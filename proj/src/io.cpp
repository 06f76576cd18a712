#include "otpalm/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace otpalm {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json matrix_rowmajor(const Matrix& M) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) arr.push_back(M(i, j));
  return arr;
}

Matrix matrix_from_rowmajor(const json& arr, Eigen::Index rows, Eigen::Index cols,
                            const char* what) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw std::invalid_argument(std::string("instance: bad length for ") + what);
  Matrix M(rows, cols);
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = arr[t++].get<double>();
  return M;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

ConeKind cone_from_string(const std::string& s) {
  if (s == "zero") return ConeKind::Zero;
  if (s == "nonneg") return ConeKind::NonnegOrthant;
  throw std::invalid_argument("instance: unknown cone kind '" + s + "'");
}

bool is_trivial_partition(const GroupPartition& p) {
  return p.groups.size() == 1 &&
         p.groups[0].size() == static_cast<std::size_t>(p.rows) * p.cols;
}

}  // namespace

json instance_to_json(const ProblemData& pd) {
  const auto& cs = pd.constraints;
  json j;
  j["m"] = pd.m();
  j["n"] = pd.n();
  j["cost"] = matrix_rowmajor(pd.C);
  j["alpha"] = vector_json(pd.alpha);
  j["beta"] = vector_json(pd.beta);

  json c;
  switch (cs.preset) {
    case PresetKind::Classical:
      c["type"] = "classical";
      break;
    case PresetKind::Partial:
      c["type"] = "partial";
      c["s"] = cs.partial_mass;
      break;
    case PresetKind::Martingale: {
      c["type"] = "martingale";
      // S = Diag(alpha) P; recover P rowwise (rows with alpha_i = 0 stay 0)
      Matrix P(pd.m(), cs.nt());
      for (int i = 0; i < pd.m(); ++i)
        P.row(i) = pd.alpha[i] > 0 ? Matrix(cs.S.row(i) / pd.alpha[i]) : cs.S.row(i);
      c["P"] = matrix_rowmajor(P);
      c["Q"] = matrix_rowmajor(cs.B);
      break;
    }
    default:
      c["type"] = "custom";
      c["A"] = matrix_rowmajor(cs.A);
      c["B"] = matrix_rowmajor(cs.B);
      c["S"] = matrix_rowmajor(cs.S);
      c["cone_r"] = to_string(cs.cone_r);
      c["cone_c"] = to_string(cs.cone_c);
      break;
  }
  j["constraint"] = std::move(c);

  j["lambda1"] = pd.reg.lambda1;
  j["lambda2"] = pd.reg.lambda2;
  if (!is_trivial_partition(pd.reg.partition)) {
    json groups = json::array();
    for (const auto& g : pd.reg.partition.groups) {
      json grp = json::array();
      for (auto [i, k] : g) grp.push_back(json::array({i, k}));
      groups.push_back(std::move(grp));
    }
    j["groups"] = std::move(groups);
    j["omega"] = vector_json(pd.reg.partition.omega);
  }
  return j;
}

ProblemData instance_from_json(const json& j) {
  const int m = j.at("m").get<int>();
  const int n = j.at("n").get<int>();
  Matrix C = matrix_from_rowmajor(j.at("cost"), m, n, "cost");
  Vector alpha = vector_from_json(j.at("alpha"));
  Vector beta = vector_from_json(j.at("beta"));

  Regularizer reg;
  reg.lambda1 = j.value("lambda1", 0.0);
  reg.lambda2 = j.value("lambda2", 0.0);
  if (j.contains("groups")) {
    std::vector<std::vector<std::pair<int, int>>> groups;
    for (const auto& grp : j.at("groups")) {
      std::vector<std::pair<int, int>> g;
      for (const auto& cell : grp) g.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
      groups.push_back(std::move(g));
    }
    Vector omega =
        j.contains("omega") ? vector_from_json(j.at("omega")) : Vector();
    reg.partition = GroupPartition::from_groups(m, n, std::move(groups), std::move(omega));
  }

  const json& c = j.at("constraint");
  const std::string type = c.at("type").get<std::string>();
  if (type == "classical")
    return build_classical(std::move(C), std::move(alpha), std::move(beta), std::move(reg));
  if (type == "partial")
    return build_partial(std::move(C), std::move(alpha), std::move(beta),
                         c.at("s").get<double>(), std::move(reg));
  if (type == "martingale") {
    const auto d = static_cast<Eigen::Index>(c.at("P").size()) / m;
    Matrix P = matrix_from_rowmajor(c.at("P"), m, d, "P");
    Matrix Q = matrix_from_rowmajor(c.at("Q"), n, d, "Q");
    return build_martingale(std::move(C), std::move(alpha), std::move(beta), std::move(P),
                            std::move(Q), std::move(reg));
  }
  if (type == "custom") {
    const auto mt = static_cast<Eigen::Index>(c.at("A").size()) / m;
    const auto nt = static_cast<Eigen::Index>(c.at("B").size()) / n;
    Matrix A = matrix_from_rowmajor(c.at("A"), mt, m, "A");
    Matrix B = matrix_from_rowmajor(c.at("B"), n, nt, "B");
    Matrix S = matrix_from_rowmajor(c.at("S"), mt, nt, "S");
    return build_custom(std::move(C), std::move(alpha), std::move(beta), std::move(A),
                        std::move(B), std::move(S),
                        cone_from_string(c.value("cone_r", "zero")),
                        cone_from_string(c.value("cone_c", "zero")), std::move(reg));
  }
  throw std::invalid_argument("instance: unknown constraint type '" + type + "'");
}

void save_instance(const ProblemData& pd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << instance_to_json(pd).dump() << '\n';
}

ProblemData load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  in >> j;
  return instance_from_json(j);
}

void export_socp(const ProblemData& pd, std::ostream& os, bool require_cones) {
  const auto& cs = pd.constraints;
  const int m = pd.m(), n = pd.n(), mn = m * n;
  const bool has_quad = pd.reg.lambda2 > 0;
  const bool has_group = pd.reg.lambda1 > 0;
  if (require_cones && !has_quad && !has_group)
    throw DegenerateCones("export_socp: lambda1 = lambda2 = 0 leaves no cones");

  const auto& part = pd.reg.partition;
  const int ng = has_group ? static_cast<int>(part.groups.size()) : 0;
  // variable order: x (row-major), then r, s, then t
  auto xvar = [n](int i, int j) { return i * n + j; };
  const int r_idx = mn, s_idx = mn + 1;
  const int t0 = has_quad ? mn + 2 : mn;

  os << "OTPALM-SOCP 1\n";
  os << "vars x " << mn << " r " << (has_quad ? 1 : 0) << " s " << (has_quad ? 1 : 0) << " t "
     << ng << "\n";

  os << "obj";
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) os << ' ' << format_double(pd.C(i, j));
  if (has_quad) os << " 0 " << format_double(pd.reg.lambda2);
  for (int g = 0; g < ng; ++g)
    os << ' ' << format_double(pd.reg.lambda1 * part.omega[g]);
  os << "\n";

  auto emit_row = [&](double lb, bool has_lb, double ub, bool has_ub,
                      const std::vector<std::pair<int, double>>& terms) {
    os << "row " << (has_lb ? format_double(lb) : std::string("-inf")) << ' '
       << (has_ub ? format_double(ub) : std::string("inf")) << ' ' << terms.size();
    for (auto [idx, coef] : terms) os << ' ' << idx << ' ' << format_double(coef);
    os << "\n";
  };

  // coupling rows A X B = S
  for (int s = 0; s < cs.mt(); ++s)
    for (int t = 0; t < cs.nt(); ++t) {
      std::vector<std::pair<int, double>> terms;
      for (int i = 0; i < m; ++i) {
        if (cs.A(s, i) == 0.0) continue;
        for (int j = 0; j < n; ++j)
          if (cs.B(j, t) != 0.0) terms.emplace_back(xvar(i, j), cs.A(s, i) * cs.B(j, t));
      }
      emit_row(cs.S(s, t), true, cs.S(s, t), true, terms);
    }
  // marginal rows
  for (int i = 0; i < m; ++i) {
    std::vector<std::pair<int, double>> terms;
    for (int j = 0; j < n; ++j) terms.emplace_back(xvar(i, j), 1.0);
    if (cs.cone_r == ConeKind::Zero)
      emit_row(pd.alpha[i], true, pd.alpha[i], true, terms);
    else
      emit_row(0, false, pd.alpha[i], true, terms);
  }
  for (int j = 0; j < n; ++j) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < m; ++i) terms.emplace_back(xvar(i, j), 1.0);
    if (cs.cone_c == ConeKind::Zero)
      emit_row(pd.beta[j], true, pd.beta[j], true, terms);
    else
      emit_row(0, false, pd.beta[j], true, terms);
  }
  if (has_quad) emit_row(1.0, true, 1.0, true, {{r_idx, 1.0}});

  if (has_quad) {
    os << "cone QR " << (2 + mn) << ' ' << r_idx << ' ' << s_idx;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) os << ' ' << xvar(i, j);
    os << "\n";
  }
  for (int g = 0; g < ng; ++g) {
    os << "cone Q " << (1 + part.groups[g].size()) << ' ' << (t0 + g);
    for (auto [i, j] : part.groups[g]) os << ' ' << xvar(i, j);
    os << "\n";
  }
  os << "end\n";
}

void export_socp_file(const ProblemData& pd, const std::string& path, bool require_cones) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  export_socp(pd, out, require_cones);
}

double socp_objective_at(const ProblemData& pd, const Matrix& X) {
  double obj = pd.C.cwiseProduct(X).sum();
  if (pd.reg.lambda2 > 0) obj += pd.reg.lambda2 * 0.5 * X.squaredNorm();
  if (pd.reg.lambda1 > 0) {
    const auto& part = pd.reg.partition;
    for (std::size_t g = 0; g < part.groups.size(); ++g) {
      double sq = 0.0;
      for (int idx : part.flat[g]) sq += X.data()[idx] * X.data()[idx];
      obj += pd.reg.lambda1 * part.omega[static_cast<Eigen::Index>(g)] * std::sqrt(sq);
    }
  }
  return obj;
}

RunRecord make_run_record(const std::string& instance_name, const ProblemData& pd,
                          const SolveReport& rep, const std::string& policy_desc,
                          double ref_obj) {
  RunRecord r;
  r.instance = instance_name;
  r.m = pd.m();
  r.n = pd.n();
  r.preset = to_string(pd.constraints.preset);
  r.lambda1 = pd.reg.lambda1;
  r.lambda2 = pd.reg.lambda2;
  r.policy = policy_desc;
  r.outer_iters = rep.outer_iters;
  r.linear_systems = rep.linear_systems_solved;
  r.time_sec = rep.solve_seconds;
  const auto& rr = rep.final_residuals;
  r.eta = rr.eta;
  r.eta_X = rr.eta_X;
  r.eta_y = rr.eta_y;
  r.eta_z = rr.eta_z;
  r.eta_feas = rr.eta_feas;
  r.eta_gap = rr.eta_gap;
  r.pobj = rr.pobj;
  r.dobj = rr.dobj;
  if (std::isfinite(ref_obj)) r.nobj = std::abs(rr.pobj - ref_obj) / (1.0 + std::abs(ref_obj));
  r.feas = primal_feasibility_measure(pd, rep.primal);
  r.status = to_string(rep.status);
  return r;
}

json run_record_to_json(const RunRecord& r) {
  json j;
  j["instance"] = r.instance;
  j["m"] = r.m;
  j["n"] = r.n;
  j["preset"] = r.preset;
  j["lambda1"] = r.lambda1;
  j["lambda2"] = r.lambda2;
  j["policy"] = r.policy;
  j["outer_iters"] = r.outer_iters;
  j["linear_systems"] = r.linear_systems;
  j["time_sec"] = r.time_sec;
  j["eta"] = r.eta;
  j["eta_X"] = r.eta_X;
  j["eta_y"] = r.eta_y;
  j["eta_z"] = r.eta_z;
  j["eta_feas"] = r.eta_feas;
  j["eta_gap"] = r.eta_gap;
  j["pobj"] = r.pobj;
  j["dobj"] = r.dobj;
  if (std::isfinite(r.nobj)) j["nobj"] = r.nobj; else j["nobj"] = nullptr;
  j["feas"] = r.feas;
  j["status"] = r.status;
  return j;
}

std::string run_record_csv_header() {
  return "instance,m,n,preset,lambda1,lambda2,policy,outer_iters,linear_systems,time_sec,"
         "eta,eta_X,eta_y,eta_z,eta_feas,eta_gap,pobj,dobj,nobj,feas,status";
}

std::string run_record_csv_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.instance << ',' << r.m << ',' << r.n << ',' << r.preset << ','
     << format_double(r.lambda1) << ',' << format_double(r.lambda2) << ',' << r.policy << ','
     << r.outer_iters << ',' << r.linear_systems << ',' << format_double(r.time_sec) << ','
     << format_double(r.eta) << ',' << format_double(r.eta_X) << ',' << format_double(r.eta_y)
     << ',' << format_double(r.eta_z) << ',' << format_double(r.eta_feas) << ','
     << format_double(r.eta_gap) << ',' << format_double(r.pobj) << ',' << format_double(r.dobj)
     << ',' << (std::isfinite(r.nobj) ? format_double(r.nobj) : std::string()) << ','
     << format_double(r.feas) << ',' << r.status;
  return os.str();
}

}  // namespace otpalm
