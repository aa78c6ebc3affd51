#pragma once

#include <Eigen/Core>

#include <memory>
#include <variant>
#include <vector>

#include "hiertraj/dynamics.hpp"

namespace hiertraj {

enum class HessianMode { gauss_newton, full };

// Cartesian reaching error of one body point over the window [window_start, N].
struct ReachTask {
  int body_point = 1;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  int window_start = -1;  // -1 means terminal: [N, N]
};

// Pure control effort, E = weight * I. Only legal at the lowest priority.
struct EffortTask {
  double weight = 1e-4;
};

struct TaskSpec {
  int priority = 1;  // 1 = highest
  std::variant<ReachTask, EffortTask> kind;
};

struct TaskStack {
  std::vector<TaskSpec> tasks;  // ordered by priority

  int size() const { return static_cast<int>(tasks.size()); }
  // Priorities must be 1..K with no duplicates; a nonzero effort weight is
  // allowed only on the lowest-priority task; reach windows must fit in N.
  void validate(const DiscreteSystem& sys) const;
};

struct ResidualJacobian {
  Eigen::VectorXd c;  // residual at X
  Eigen::MatrixXd C;  // d c / d X, dim(c) x nN
};

ResidualJacobian residual_and_jacobian(const TaskSpec& task, const Eigen::VectorXd& X,
                                       const DiscreteSystem& sys);

// g = 1/2 ||c(X)||^2 + 1/2 U^T E U
double task_cost(const TaskSpec& task, const Eigen::VectorXd& X, const Eigen::VectorXd& U,
                 const DiscreteSystem& sys);

Eigen::VectorXd compute_costs(const TaskStack& stack, const Eigen::VectorXd& X,
                              const Eigen::VectorXd& U, const DiscreteSystem& sys);

// C^T C, plus the residual-contracted second derivative in full mode
// (central differences of C with step 1e-5).
Eigen::MatrixXd hessian_term(const TaskSpec& task, const Eigen::VectorXd& X,
                             const DiscreteSystem& sys, HessianMode mode);

// ---- solver-facing view of one priority level ---------------------------------

// One priority level as the cascade consumes it: a residual on the state
// trajectory plus an isotropic effort weight.
class CostLevel {
 public:
  virtual ~CostLevel() = default;
  virtual ResidualJacobian residual_jacobian(const Eigen::VectorXd& X) const = 0;
  virtual double effort_weight() const = 0;

  double cost(const Eigen::VectorXd& X, const Eigen::VectorXd& U) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& X, HessianMode mode) const;
};

using LevelPtr = std::shared_ptr<const CostLevel>;

// One level per task, in priority order.
std::vector<LevelPtr> make_levels(const TaskStack& stack, const DiscreteSystem& sys);

Eigen::VectorXd level_costs(const std::vector<LevelPtr>& levels, const Eigen::VectorXd& X,
                            const Eigen::VectorXd& U);

}  // namespace hiertraj
