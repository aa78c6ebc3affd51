#pragma once

#include <Eigen/Core>

#include <limits>
#include <utility>

#include "hiertraj/dynamics.hpp"
#include "hiertraj/tasks.hpp"

namespace hiertraj::test {

// Literal double integrator: x = (p, v), pdot = v, vdot = u. Exactly linear,
// so the solver's quadratic model is exact and a batch solve is a usable
// oracle.
class DoubleIntegratorPlant final : public Plant {
 public:
  DoubleIntegratorPlant(double dt, int horizon) : dt_(dt), horizon_(horizon) {}

  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int horizon() const override { return horizon_; }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override {
    Eigen::VectorXd next(2);
    next(0) = x(0) + dt_ * x(1);
    next(1) = x(1) + dt_ * u(0);
    return next;
  }

  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(
      const Eigen::VectorXd&, const Eigen::VectorXd&) const override {
    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 1.0, dt_, 0.0, 1.0;
    B << 0.0, dt_;
    return {A, B};
  }

  double dt() const { return dt_; }

 private:
  double dt_;
  int horizon_;
};

// Residual linear in the state trajectory: c = Sel * X - ref.
class LinearResidualLevel final : public CostLevel {
 public:
  LinearResidualLevel(Eigen::MatrixXd sel, Eigen::VectorXd ref, double effort)
      : sel_(std::move(sel)), ref_(std::move(ref)), effort_(effort) {}

  ResidualJacobian residual_jacobian(const Eigen::VectorXd& X) const override {
    return {sel_ * X - ref_, sel_};
  }
  double effort_weight() const override { return effort_; }

 private:
  Eigen::MatrixXd sel_;
  Eigen::VectorXd ref_;
  double effort_;
};

// A plant whose rollout blows up for any control different from zero; used to
// drive the tuning loop to exhaustion.
class ExplodingPlant final : public Plant {
 public:
  ExplodingPlant(int horizon) : horizon_(horizon) {}
  int state_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  int horizon() const override { return horizon_; }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override {
    Eigen::VectorXd next(1);
    next(0) = u(0) == 0.0 ? x(0) : std::numeric_limits<double>::quiet_NaN();
    return next;
  }
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(
      const Eigen::VectorXd&, const Eigen::VectorXd&) const override {
    Eigen::MatrixXd A(1, 1), B(1, 1);
    A << 1.0;
    B << 1.0;
    return {A, B};
  }

 private:
  int horizon_;
};

}  // namespace hiertraj::test
