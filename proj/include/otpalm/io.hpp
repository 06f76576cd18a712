#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "otpalm/cipalm.hpp"

namespace otpalm {

nlohmann::json instance_to_json(const ProblemData& pd);
ProblemData instance_from_json(const nlohmann::json& j);

void save_instance(const ProblemData& pd, const std::string& path);
ProblemData load_instance(const std::string& path);

struct DegenerateCones : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-based SOCP text form of the instance: variables (X, r, s, t), linear
// rows b_l <= A(X) <= b_u plus r = 1, one rotated cone over (r, s, vec X)
// and one second-order cone per group over (t_G, x_G). Degenerate cones are
// elided when the corresponding regularization weight vanishes; with
// require_cones set that case throws instead.
void export_socp(const ProblemData& pd, std::ostream& os, bool require_cones = false);
void export_socp_file(const ProblemData& pd, const std::string& path, bool require_cones = false);

// Objective of the exported problem at a lifted point (t_G = ||x_G||,
// s = ||X||^2/2, r = 1).
double socp_objective_at(const ProblemData& pd, const Matrix& X);

struct RunRecord {
  std::string instance;
  int m = 0, n = 0;
  std::string preset;
  double lambda1 = 0, lambda2 = 0;
  std::string policy;
  int outer_iters = 0;
  long linear_systems = 0;
  double time_sec = 0;
  double eta = 0, eta_X = 0, eta_y = 0, eta_z = 0, eta_feas = 0, eta_gap = 0;
  double pobj = 0, dobj = 0;
  double nobj = std::numeric_limits<double>::quiet_NaN();  // needs a reference objective
  double feas = 0;
  std::string status;
};

RunRecord make_run_record(const std::string& instance_name, const ProblemData& pd,
                          const SolveReport& rep, const std::string& policy_desc,
                          double ref_obj = std::numeric_limits<double>::quiet_NaN());

nlohmann::json run_record_to_json(const RunRecord& r);
std::string run_record_csv_header();
std::string run_record_csv_row(const RunRecord& r);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace otpalm
