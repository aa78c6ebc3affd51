#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "hiertraj/config.hpp"
#include "hiertraj/solver.hpp"
#include "hiertraj/tracker.hpp"

namespace hiertraj {

// Report document: config echo, per-iteration costs/penalties/variations,
// termination, final trajectory, and per-reach-task terminal error norms.
nlohmann::json report_to_json(const SolveReport& report, const ExperimentConfig& cfg,
                              const std::string& variant, double weight = 0.0);

// Re-reads the fields needed for audits; cost vectors round-trip bitwise.
SolveReport report_from_json(const nlohmann::json& j);

// Terminal reach-error norms (one per reach task) of a solved trajectory.
Eigen::VectorXd final_task_errors(const Trajectory& traj, const TaskStack& stack,
                                  const DiscreteSystem& sys);

// CSV with header t,q1..qn,dq1..dqn,u1..um; one row per time step, the last
// row repeats the final control (zero-order hold). 17 significant digits.
std::string trajectory_to_csv(const Trajectory& traj, const DiscreteSystem& sys);

// CSV with header t,q...,dq...,u... at the control period.
std::string tracking_states_to_csv(const TrackingLog& log, int link_count);

// CSV with header t,err1..errK,p1x,p1y,...: per-task error norms and task
// positions over time.
std::string tracking_errors_to_csv(const TrackingLog& log);

// Whole-file atomic write (temp file + rename).
void write_text_atomic(const std::string& path, const std::string& content);

void write_json_atomic(const std::string& path, const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);

}  // namespace hiertraj
