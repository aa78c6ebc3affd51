#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hiertraj/dynamics.hpp"
#include "hiertraj/solver.hpp"
#include "hiertraj/tasks.hpp"
#include "hiertraj/tracker.hpp"

namespace hiertraj {

// Raised on malformed configs; the message names the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrackerSettings {
  double kp = 10.0;
  double kd = 5.0;
  double damping_raw = 0.1;      // lambda for raw min-jerk references
  double damping_planned = 0.01;  // lambda when tracking planner output
  double control_dt = 1e-3;
  double duration = 1.5;
  double reference_duration = 1.0;  // min-jerk time-to-target
  Integrator integrator = Integrator::euler;

  TrackerConfig make_config(double damping) const;
};

struct ExperimentConfig {
  ArmModel arm = ArmModel::uniform(3, 0.5, 1.0, 0.1);
  double dt = 0.02;
  int horizon = 50;
  Eigen::VectorXd initial_q;   // defaults to zeros(link_count)
  Eigen::VectorXd initial_dq;  // defaults to zeros(link_count)
  TaskStack stack;
  SolverConfig solver;
  double penalty_s = 1.0;
  double penalty_r = 1e-2;
  double mu = 1.5;
  int max_tuning_iters = 50;
  std::vector<double> baseline_weights = {1e2, 1e3, 1e4};
  TrackerSettings tracker;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  DiscreteSystem system() const;
  Eigen::VectorXd initial_state() const;
  PenaltyState penalties(int levels) const;
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

}  // namespace hiertraj
