#include "hiertraj/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>

#include <nlohmann/json.hpp>

namespace hiertraj {

namespace {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  Eigen::Index i = 0;
  for (const auto& e : a) v(i++) = e.get<double>();
  return v;
}

// 17 significant digits: enough for double round trips.
void append_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_row(std::string& out, double t, const Eigen::VectorXd& state,
                const Eigen::VectorXd& control) {
  append_value(out, t);
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    out += ',';
    append_value(out, state(i));
  }
  for (Eigen::Index i = 0; i < control.size(); ++i) {
    out += ',';
    append_value(out, control(i));
  }
  out += '\n';
}

std::string state_control_header(int nl) {
  std::string header = "t";
  for (int i = 1; i <= nl; ++i) header += ",q" + std::to_string(i);
  for (int i = 1; i <= nl; ++i) header += ",dq" + std::to_string(i);
  for (int i = 1; i <= nl; ++i) header += ",u" + std::to_string(i);
  header += '\n';
  return header;
}

}  // namespace

json report_to_json(const SolveReport& report, const ExperimentConfig& cfg,
                    const std::string& variant, double weight) {
  json j;
  j["schema"] = "hiertraj-report-v1";
  j["variant"] = variant;
  if (variant == "weighted") j["weight"] = weight;
  j["config"] = config_to_json(cfg);
  j["termination"] = to_string(report.termination);
  j["message"] = report.message;
  if (report.failed_level >= 0) j["failed_level"] = report.failed_level;
  if (report.divergence_time >= 0) j["divergence_time"] = report.divergence_time;
  j["initial_costs"] = to_json(report.initial_costs);
  if (report.initial_aux_costs.size() > 0)
    j["initial_task_costs"] = to_json(report.initial_aux_costs);

  json iters = json::array();
  for (const IterationRecord& rec : report.iterations) {
    json it;
    it["costs"] = to_json(rec.costs);
    if (rec.aux_costs.size() > 0) it["task_costs"] = to_json(rec.aux_costs);
    it["s"] = to_json(rec.s);
    it["r"] = to_json(rec.r);
    it["tuning_counts"] = rec.tuning_counts;
    json vars = json::array();
    for (const Eigen::VectorXd& v : rec.variations) vars.push_back(to_json(v));
    it["variations"] = vars;
    it["step_norm"] = rec.step_norm;
    iters.push_back(std::move(it));
  }
  j["iterations"] = std::move(iters);

  j["final_trajectory"] = {{"x_s", to_json(report.trajectory.x_s)},
                           {"X", to_json(report.trajectory.X)},
                           {"U", to_json(report.trajectory.U)}};
  if (!cfg.stack.tasks.empty()) {
    j["final_task_errors"] =
        to_json(final_task_errors(report.trajectory, cfg.stack, cfg.system()));
  }
  return j;
}

SolveReport report_from_json(const json& j) {
  SolveReport report;
  const std::string term = j.at("termination").get<std::string>();
  if (term == "converged") report.termination = Termination::converged;
  else if (term == "max_iters") report.termination = Termination::max_iters;
  else if (term == "tuning_exhausted") report.termination = Termination::tuning_exhausted;
  else if (term == "divergence") report.termination = Termination::divergence;
  else throw std::runtime_error("report: unknown termination " + term);
  report.message = j.value("message", "");
  report.failed_level = j.value("failed_level", -1);
  report.divergence_time = j.value("divergence_time", -1);
  report.initial_costs = vector_from_json(j.at("initial_costs"));
  if (j.contains("initial_task_costs"))
    report.initial_aux_costs = vector_from_json(j.at("initial_task_costs"));
  for (const auto& it : j.at("iterations")) {
    IterationRecord rec;
    rec.costs = vector_from_json(it.at("costs"));
    if (it.contains("task_costs")) rec.aux_costs = vector_from_json(it.at("task_costs"));
    rec.s = vector_from_json(it.at("s"));
    rec.r = vector_from_json(it.at("r"));
    rec.tuning_counts = it.at("tuning_counts").get<std::vector<int>>();
    for (const auto& v : it.at("variations")) rec.variations.push_back(vector_from_json(v));
    rec.step_norm = it.at("step_norm").get<double>();
    report.iterations.push_back(std::move(rec));
  }
  const json& traj = j.at("final_trajectory");
  report.trajectory.x_s = vector_from_json(traj.at("x_s"));
  report.trajectory.X = vector_from_json(traj.at("X"));
  report.trajectory.U = vector_from_json(traj.at("U"));
  report.trajectory.consistent = true;
  return report;
}

Eigen::VectorXd final_task_errors(const Trajectory& traj, const TaskStack& stack,
                                  const DiscreteSystem& sys) {
  const int n = sys.model.state_dim();
  const Eigen::VectorXd q_N =
      traj.X.segment(static_cast<Eigen::Index>(sys.horizon - 1) * n, sys.model.link_count());
  std::vector<double> errs;
  for (const TaskSpec& t : stack.tasks) {
    if (const auto* reach = std::get_if<ReachTask>(&t.kind)) {
      errs.push_back(
          (forward_kinematics(q_N, reach->body_point, sys.model) - reach->target).norm());
    }
  }
  return Eigen::Map<Eigen::VectorXd>(errs.data(), static_cast<Eigen::Index>(errs.size()));
}

std::string trajectory_to_csv(const Trajectory& traj, const DiscreteSystem& sys) {
  const int n = sys.model.state_dim();
  const int m = sys.model.control_dim();
  const int N = sys.horizon;
  std::string out = state_control_header(sys.model.link_count());
  for (int t = 0; t <= N; ++t) {
    const Eigen::VectorXd x =
        (t == 0) ? traj.x_s : traj.X.segment(static_cast<Eigen::Index>(t - 1) * n, n).eval();
    const int uidx = std::min(t, N - 1);
    const Eigen::VectorXd u = traj.U.segment(static_cast<Eigen::Index>(uidx) * m, m);
    append_row(out, t * sys.dt, x, u);
  }
  return out;
}

std::string tracking_states_to_csv(const TrackingLog& log, int link_count) {
  std::string out = state_control_header(link_count);
  const Eigen::Index steps = log.controls.rows();
  for (Eigen::Index i = 0; i < log.times.size(); ++i) {
    const Eigen::VectorXd u = log.controls.row(std::min(i, steps - 1));
    append_row(out, log.times(i), log.states.row(i), u);
  }
  return out;
}

std::string tracking_errors_to_csv(const TrackingLog& log) {
  const int K = static_cast<int>(log.task_positions.size());
  std::string out = "t";
  for (int k = 1; k <= K; ++k) out += ",err" + std::to_string(k);
  for (int k = 1; k <= K; ++k)
    out += ",p" + std::to_string(k) + "x,p" + std::to_string(k) + "y";
  out += '\n';
  for (Eigen::Index i = 0; i < log.times.size(); ++i) {
    append_value(out, log.times(i));
    for (int k = 0; k < K; ++k) {
      out += ',';
      append_value(out, log.task_errors(i, k));
    }
    for (int k = 0; k < K; ++k) {
      out += ',';
      append_value(out, log.task_positions[k](i, 0));
      out += ',';
      append_value(out, log.task_positions[k](i, 1));
    }
    out += '\n';
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.good()) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_json_atomic(const std::string& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace hiertraj
