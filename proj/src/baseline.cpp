#include "hiertraj/baseline.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>

namespace hiertraj {

namespace {

class WeightedLevel final : public CostLevel {
 public:
  WeightedLevel(TaskStack stack, double w, DiscreteSystem sys)
      : stack_(std::move(stack)), sys_(std::move(sys)) {
    if (!(w > 0.0)) throw std::invalid_argument("weighted_oc: w must be > 0");
    int reach_count = 0;
    for (const TaskSpec& t : stack_.tasks) {
      if (std::holds_alternative<ReachTask>(t.kind)) ++reach_count;
      else effort_ = std::get<EffortTask>(t.kind).weight;
    }
    int j = 0;
    for (const TaskSpec& t : stack_.tasks) {
      if (!std::holds_alternative<ReachTask>(t.kind)) continue;
      // cost factor w^(K_r - 1 - j) on task j needs sqrt of it on the residual
      scales_.push_back(std::pow(w, 0.5 * static_cast<double>(reach_count - 1 - j)));
      ++j;
    }
  }

  ResidualJacobian residual_jacobian(const Eigen::VectorXd& X) const override {
    std::vector<ResidualJacobian> parts;
    Eigen::Index rows = 0;
    int j = 0;
    for (const TaskSpec& t : stack_.tasks) {
      if (!std::holds_alternative<ReachTask>(t.kind)) continue;
      ResidualJacobian rj = residual_and_jacobian(t, X, sys_);
      rj.c *= scales_[j];
      rj.C *= scales_[j];
      rows += rj.c.size();
      parts.push_back(std::move(rj));
      ++j;
    }
    ResidualJacobian out;
    out.c = Eigen::VectorXd(rows);
    out.C = Eigen::MatrixXd(rows, X.size());
    Eigen::Index at = 0;
    for (const ResidualJacobian& rj : parts) {
      out.c.segment(at, rj.c.size()) = rj.c;
      out.C.middleRows(at, rj.c.size()) = rj.C;
      at += rj.c.size();
    }
    return out;
  }

  double effort_weight() const override { return effort_; }

 private:
  TaskStack stack_;
  DiscreteSystem sys_;
  std::vector<double> scales_;
  double effort_ = 0.0;
};

}  // namespace

LevelPtr make_weighted_level(const TaskStack& stack, double w, const DiscreteSystem& sys) {
  stack.validate(sys);
  return std::make_shared<WeightedLevel>(stack, w, sys);
}

SolveReport weighted_oc(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U0,
                        const WeightedSpec& spec, const DiscreteSystem& sys,
                        const SolverConfig& cfg, PenaltyState penalties) {
  const ArmPlant plant(sys);
  std::vector<LevelPtr> levels{make_weighted_level(spec.stack, spec.w, sys)};
  const TaskStack stack = spec.stack;
  AuxCostFn aux = [stack, sys](const Eigen::VectorXd& X, const Eigen::VectorXd& U) {
    return compute_costs(stack, X, U, sys);
  };
  return prioritized_oc(plant, x_s, U0, levels, cfg, std::move(penalties), aux);
}

}  // namespace hiertraj
