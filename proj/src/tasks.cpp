#include "hiertraj/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace hiertraj {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

int effective_window_start(const ReachTask& task, const DiscreteSystem& sys) {
  return task.window_start < 0 ? sys.horizon : task.window_start;
}

}  // namespace

void TaskStack::validate(const DiscreteSystem& sys) const {
  require(!tasks.empty(), "tasks: at least one task required");
  const int K = size();
  std::set<int> seen;
  for (const TaskSpec& t : tasks) {
    require(t.priority >= 1 && t.priority <= K, "tasks.priority: must be 1..K");
    require(seen.insert(t.priority).second, "tasks.priority: duplicate priority");
  }
  for (int i = 1; i < K; ++i) {
    require(tasks[i - 1].priority < tasks[i].priority,
            "tasks: must be ordered by priority");
  }
  for (const TaskSpec& t : tasks) {
    if (const auto* reach = std::get_if<ReachTask>(&t.kind)) {
      require(reach->body_point >= 1 && reach->body_point <= sys.model.link_count(),
              "tasks.body_point: out of range");
      if (reach->window_start >= 0) {
        require(reach->window_start >= 1 && reach->window_start <= sys.horizon,
                "tasks.window_start: must satisfy 1 <= t_a <= N");
      }
    } else {
      const auto& effort = std::get<EffortTask>(t.kind);
      require(effort.weight >= 0.0, "tasks.weight: must be >= 0");
      require(effort.weight == 0.0 || t.priority == K,
              "tasks: nonzero effort weight only allowed at the lowest priority");
    }
  }
}

ResidualJacobian residual_and_jacobian(const TaskSpec& task, const Eigen::VectorXd& X,
                                       const DiscreteSystem& sys) {
  require(X.allFinite(), "residual_and_jacobian: non-finite X");
  const int nl = sys.model.link_count();
  const int n = sys.model.state_dim();
  const int N = sys.horizon;
  require(X.size() == static_cast<Eigen::Index>(n) * N,
          "residual_and_jacobian: X dimension mismatch");

  ResidualJacobian out;
  if (std::holds_alternative<EffortTask>(task.kind)) {
    out.c = Eigen::VectorXd(0);
    out.C = Eigen::MatrixXd(0, n * N);
    return out;
  }

  const auto& reach = std::get<ReachTask>(task.kind);
  const int t_a = effective_window_start(reach, sys);
  require(t_a >= 1 && t_a <= N, "residual_and_jacobian: window exceeds horizon");
  const int len = N - t_a + 1;

  out.c = Eigen::VectorXd(2 * len);
  out.C = Eigen::MatrixXd::Zero(2 * len, n * N);
  for (int w = 0; w < len; ++w) {
    const int t = t_a + w;  // 1-based state index
    const Eigen::VectorXd q = X.segment(static_cast<Eigen::Index>(t - 1) * n, nl);
    out.c.segment(2 * w, 2) = forward_kinematics(q, reach.body_point, sys.model) - reach.target;
    // only the q block of state t carries the Jacobian; velocities do not enter
    out.C.block(2 * w, static_cast<Eigen::Index>(t - 1) * n, 2, nl) =
        body_point_jacobian(q, reach.body_point, sys.model);
  }
  return out;
}

double task_cost(const TaskSpec& task, const Eigen::VectorXd& X, const Eigen::VectorXd& U,
                 const DiscreteSystem& sys) {
  if (const auto* effort = std::get_if<EffortTask>(&task.kind)) {
    return 0.5 * effort->weight * U.squaredNorm();
  }
  const ResidualJacobian rj = residual_and_jacobian(task, X, sys);
  return 0.5 * rj.c.squaredNorm();
}

Eigen::VectorXd compute_costs(const TaskStack& stack, const Eigen::VectorXd& X,
                              const Eigen::VectorXd& U, const DiscreteSystem& sys) {
  Eigen::VectorXd J(stack.size());
  for (int k = 0; k < stack.size(); ++k) J(k) = task_cost(stack.tasks[k], X, U, sys);
  return J;
}

namespace {

// Contraction sum_i c_i(Xbar) * d^2 c_i / dX^2 by central differences of the
// Jacobian map, swept only over coordinates the residual can depend on.
Eigen::MatrixXd contracted_curvature(
    const Eigen::VectorXd& X, const Eigen::VectorXd& c,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jac,
    const std::vector<Eigen::Index>& support) {
  const Eigen::Index dim = X.size();
  const double h = 1e-5;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd Xp = X, Xm = X;
  for (Eigen::Index j : support) {
    Xp(j) += h;
    Xm(j) -= h;
    const Eigen::MatrixXd dC = (jac(Xp) - jac(Xm)) / (2.0 * h);
    W.row(j) = c.transpose() * dC;
    Xp(j) = X(j);
    Xm(j) = X(j);
  }
  return 0.5 * (W + W.transpose());
}

std::vector<Eigen::Index> all_coordinates(Eigen::Index dim) {
  std::vector<Eigen::Index> idx(dim);
  for (Eigen::Index i = 0; i < dim; ++i) idx[i] = i;
  return idx;
}

}  // namespace

Eigen::MatrixXd hessian_term(const TaskSpec& task, const Eigen::VectorXd& X,
                             const DiscreteSystem& sys, HessianMode mode) {
  const ResidualJacobian rj = residual_and_jacobian(task, X, sys);
  Eigen::MatrixXd H = rj.C.transpose() * rj.C;
  if (mode == HessianMode::gauss_newton || rj.c.size() == 0) return H;

  // restrict the sweep to the window's q coordinates
  std::vector<Eigen::Index> support;
  const auto& reach = std::get<ReachTask>(task.kind);
  const int nl = sys.model.link_count();
  const int n = sys.model.state_dim();
  const int t_a = effective_window_start(reach, sys);
  for (int t = t_a; t <= sys.horizon; ++t)
    for (int j = 0; j < nl; ++j)
      support.push_back(static_cast<Eigen::Index>(t - 1) * n + j);

  H += contracted_curvature(
      X, rj.c,
      [&](const Eigen::VectorXd& Xq) { return residual_and_jacobian(task, Xq, sys).C; },
      support);
  return H;
}

double CostLevel::cost(const Eigen::VectorXd& X, const Eigen::VectorXd& U) const {
  const ResidualJacobian rj = residual_jacobian(X);
  return 0.5 * rj.c.squaredNorm() + 0.5 * effort_weight() * U.squaredNorm();
}

Eigen::MatrixXd CostLevel::hessian(const Eigen::VectorXd& X, HessianMode mode) const {
  const ResidualJacobian rj = residual_jacobian(X);
  Eigen::MatrixXd H = rj.C.transpose() * rj.C;
  if (mode == HessianMode::gauss_newton || rj.c.size() == 0) return H;
  H += contracted_curvature(
      X, rj.c, [this](const Eigen::VectorXd& Xq) { return residual_jacobian(Xq).C; },
      all_coordinates(X.size()));
  return H;
}

namespace {

class TaskLevel final : public CostLevel {
 public:
  TaskLevel(TaskSpec task, DiscreteSystem sys) : task_(std::move(task)), sys_(std::move(sys)) {}

  ResidualJacobian residual_jacobian(const Eigen::VectorXd& X) const override {
    return residual_and_jacobian(task_, X, sys_);
  }
  double effort_weight() const override {
    if (const auto* effort = std::get_if<EffortTask>(&task_.kind)) return effort->weight;
    return 0.0;
  }

 private:
  TaskSpec task_;
  DiscreteSystem sys_;
};

}  // namespace

std::vector<LevelPtr> make_levels(const TaskStack& stack, const DiscreteSystem& sys) {
  stack.validate(sys);
  std::vector<LevelPtr> levels;
  levels.reserve(stack.tasks.size());
  for (const TaskSpec& t : stack.tasks) levels.push_back(std::make_shared<TaskLevel>(t, sys));
  return levels;
}

Eigen::VectorXd level_costs(const std::vector<LevelPtr>& levels, const Eigen::VectorXd& X,
                            const Eigen::VectorXd& U) {
  Eigen::VectorXd J(static_cast<Eigen::Index>(levels.size()));
  for (size_t k = 0; k < levels.size(); ++k) J(static_cast<Eigen::Index>(k)) = levels[k]->cost(X, U);
  return J;
}

}  // namespace hiertraj
