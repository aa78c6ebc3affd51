#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace hiertraj {

// Planar serial chain under gravity. Joint angles are relative; the absolute
// orientation of link i is q_1 + ... + q_i, measured from the +x axis.
// Gravity pulls along -y. State x = (q, qdot), control u = joint torques.
struct ArmModel {
  Eigen::VectorXd link_lengths;   // m
  Eigen::VectorXd link_masses;    // kg
  Eigen::VectorXd link_inertias;  // kg m^2, about the link's center of mass
  Eigen::VectorXd com_offsets;    // m along the link, from the parent joint
  Eigen::VectorXd joint_damping;  // N m s / rad
  double gravity = 9.81;          // m / s^2

  int link_count() const { return static_cast<int>(link_lengths.size()); }
  int state_dim() const { return 2 * link_count(); }
  int control_dim() const { return link_count(); }

  // Uniform arm: every link has the given length and mass, com at mid-link,
  // inertia of a uniform rod about its com.
  static ArmModel uniform(int links, double length, double mass, double damping,
                          double gravity = 9.81);

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct DiscreteSystem {
  ArmModel model;
  double dt = 0.02;
  int horizon = 50;  // N

  void validate() const;
};

// Paired state/control trajectories. X stacks x_1..x_N (the initial state is
// held separately), U stacks u_0..u_{N-1}. `consistent` marks X as the exact
// rollout of U from x_s.
struct Trajectory {
  Eigen::VectorXd x_s;
  Eigen::VectorXd X;
  Eigen::VectorXd U;
  bool consistent = false;
};

// Per-step Jacobians of the rollout and the assembled control-to-state map.
struct LinearizedDynamics {
  std::vector<Eigen::MatrixXd> A;  // N matrices, n x n
  std::vector<Eigen::MatrixXd> B;  // N matrices, n x m
  Eigen::MatrixXd G;               // nN x mN, block lower triangular
};

// ---- arm-specific quantities ------------------------------------------------

Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q, const ArmModel& model);

// Coriolis/centrifugal + gravity + viscous damping, so that
// M(q) qddot + bias(q, qdot) = u.
Eigen::VectorXd bias_forces(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                            const ArmModel& model);

// Torque making (q, 0) an exact fixed point of the Euler step.
Eigen::VectorXd gravity_compensation(const Eigen::VectorXd& q, const ArmModel& model);

// Planar position of the tip of link `body_point` (1-based).
Eigen::Vector2d forward_kinematics(const Eigen::VectorXd& q, int body_point,
                                   const ArmModel& model);

// 2 x n_links position Jacobian of the link tip, and its time derivative.
Eigen::MatrixXd body_point_jacobian(const Eigen::VectorXd& q, int body_point,
                                    const ArmModel& model);
Eigen::MatrixXd body_point_jacobian_dot(const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& qdot, int body_point,
                                        const ArmModel& model);

// Continuous dynamics xdot = f(x, u); used by the tracker's integrators.
Eigen::VectorXd continuous_dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    const ArmModel& model);

// ---- discrete-time plant interface ------------------------------------------

// What the solver needs from a plant: one transition and its Jacobians.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int horizon() const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  // Jacobians (A, B) of step at (x, u).
  virtual std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(
      const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
};

// Explicit-Euler discretization of the arm.
class ArmPlant final : public Plant {
 public:
  explicit ArmPlant(DiscreteSystem sys);

  int state_dim() const override { return sys_.model.state_dim(); }
  int control_dim() const override { return sys_.model.control_dim(); }
  int horizon() const override { return sys_.horizon; }
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(
      const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;

  const DiscreteSystem& system() const { return sys_; }

 private:
  DiscreteSystem sys_;
};

// ---- trajectory-level operations ---------------------------------------------

// One Euler step of the arm.
Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const DiscreteSystem& sys);

// Jacobians of `step` by central finite differences (step 1e-6).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u,
                                                      const DiscreteSystem& sys);

// Sequential rollout of U from x_s. Throws DivergenceError naming the first
// non-finite step.
Eigen::VectorXd simulate_trajectory(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U,
                                    const Plant& plant);
Eigen::VectorXd simulate_trajectory(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U,
                                    const DiscreteSystem& sys);

// Block (t, tau) of G equals A_{t-1} ... A_{tau+1} B_tau for tau <= t-1
// (empty product = identity) and zero otherwise.
Eigen::MatrixXd assemble_G(const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& lin);

// Per-step Jacobians along a nominal trajectory plus the assembled G.
LinearizedDynamics linearize_trajectory(const Trajectory& nominal, const Plant& plant);

}  // namespace hiertraj
