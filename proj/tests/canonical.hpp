#pragma once

#include <cmath>

#include "hiertraj/config.hpp"
#include "hiertraj/dynamics.hpp"
#include "hiertraj/tasks.hpp"

namespace hiertraj::test {

// The canonical three-task conflicting instance shared by the integration
// tests and the acceptance suite. Three 2-D point tasks on a 3-DoF arm: six
// task dimensions against three joints, each target reachable on its own but
// the three jointly impossible, with an effort objective at the bottom of the
// stack. Mirrors configs/canonical.json.
inline ExperimentConfig canonical_config() {
  ExperimentConfig cfg;
  cfg.arm = ArmModel::uniform(3, 0.5, 1.0, 0.1);
  cfg.dt = 0.02;
  cfg.horizon = 50;
  cfg.initial_q = Eigen::Vector3d(-M_PI / 2.0, 0.0, 0.0);  // hanging at rest
  cfg.initial_dq = Eigen::Vector3d::Zero();

  TaskSpec reach1{1, ReachTask{3, {0.9, 0.6}, 50}};
  TaskSpec reach2{2, ReachTask{2, {-0.4, 0.85}, 50}};
  TaskSpec reach3{3, ReachTask{1, {-0.35, 0.35}, 50}};
  TaskSpec effort{4, EffortTask{1e-4}};
  cfg.stack.tasks = {reach1, reach2, reach3, effort};

  cfg.output_dir = "out";
  return cfg;
}

inline Eigen::VectorXd gravity_hold_controls(const DiscreteSystem& sys,
                                             const Eigen::VectorXd& x0) {
  const int m = sys.model.control_dim();
  const Eigen::VectorXd u = gravity_compensation(x0.head(sys.model.link_count()), sys.model);
  Eigen::VectorXd U(static_cast<Eigen::Index>(m) * sys.horizon);
  for (int t = 0; t < sys.horizon; ++t) U.segment(static_cast<Eigen::Index>(t) * m, m) = u;
  return U;
}

inline double workspace_scale(const ArmModel& model) {
  return model.link_lengths.sum();
}

}  // namespace hiertraj::test
