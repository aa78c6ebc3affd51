#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "hiertraj/dynamics.hpp"
#include "hiertraj/linalg.hpp"
#include "hiertraj/tasks.hpp"

namespace hiertraj {

enum class Integrator { euler, rk4 };

struct TrackerConfig {
  Eigen::Vector2d kp = Eigen::Vector2d::Constant(10.0);  // s^-2
  Eigen::Vector2d kd = Eigen::Vector2d::Constant(5.0);   // s^-1
  double damping = 0.02;                                 // pseudoinverse lambda
  double control_dt = 1e-3;                              // s
  Integrator integrator = Integrator::euler;
  PinvConfig projector_pinv;  // rank cutoff for the nullspace updates

  void validate() const;
};

struct ReferenceSample {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
};

// Quintic profile s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5, clamped to (pf,0,0)
// for t >= T.
void min_jerk_reference(const Eigen::VectorXd& p0, const Eigen::VectorXd& pf, double T,
                        double t, Eigen::VectorXd& x_r, Eigen::VectorXd& v_r,
                        Eigen::VectorXd& a_r);

// xdd* = a_r + Kd (v_r - v) + Kp (x_r - x)
Eigen::Vector2d pd_accel(const Eigen::Vector2d& x, const Eigen::Vector2d& v,
                         const ReferenceSample& ref, const TrackerConfig& cfg);

// J^T (J J^T + lambda^2 I)^-1
Eigen::MatrixXd damped_pinv(const Eigen::MatrixXd& J, double lambda);

// One reference per reach task, in priority order.
struct TaskRef {
  int body_point = 1;
  ReferenceSample ref;
};

// Acceleration-level damped cascade followed by inverse dynamics.
Eigen::VectorXd controller_step(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                const std::vector<TaskRef>& refs, const ArmModel& model,
                                const TrackerConfig& cfg);

// Time-varying reference set for the closed loop: body points in priority
// order plus a sampler mapping t to one ReferenceSample per task.
struct ReferenceSource {
  std::vector<int> body_points;
  std::function<std::vector<ReferenceSample>(double t)> sample;
};

// Quasi-minimum-jerk references from the configuration's current body-point
// positions toward the stack targets, each of duration T.
ReferenceSource make_min_jerk_references(const TaskStack& stack, const Eigen::VectorXd& x0,
                                         double T, const ArmModel& model);

// References along a planner trajectory: states resampled to the control
// period by cubic interpolation, task-space velocity/acceleration by central
// differences, held at the final sample past the end.
ReferenceSource make_planned_references(const TaskStack& stack, const Trajectory& planned,
                                        double plan_dt, double control_dt,
                                        const ArmModel& model);

struct TrackingLog {
  Eigen::VectorXd times;                        // steps + 1
  Eigen::MatrixXd states;                       // (steps + 1) x 2n
  Eigen::MatrixXd controls;                     // steps x n
  Eigen::MatrixXd task_errors;                  // (steps + 1) x K, ||p - target||
  std::vector<Eigen::MatrixXd> task_positions;  // per task, (steps + 1) x 2
};

// Simulates the plant at control_dt under controller_step. Task errors are
// measured against the stack targets in both reference modes. Throws
// DivergenceError (time stamp in the message) if the loop blows up.
TrackingLog closed_loop_sim(const Eigen::VectorXd& x0, const ReferenceSource& refs,
                            const TaskStack& stack, double duration,
                            const TrackerConfig& cfg, const ArmModel& model);

// Peak-to-peak excursion of one task's position coordinates over [t_from, end].
double oscillation_amplitude(const TrackingLog& log, int task_index, double t_from);

}  // namespace hiertraj
