#pragma once

#include <Eigen/Core>

#include "hiertraj/solver.hpp"
#include "hiertraj/tasks.hpp"

namespace hiertraj {

// Classic weighted optimal control: one scalarized cost
// g = w^2 g_1 + w g_2 + g_3 (+ unweighted effort) minimized with the same
// linearize-solve-roll machinery, as the Test 1 comparator.
struct WeightedSpec {
  TaskStack stack;
  double w = 1.0;
};

// Single level stacking the reach residuals scaled by sqrt(w^(K_r - j)), so
// that 1/2||.||^2 reproduces the w^2, w, 1 cost factors. The effort weight of
// the stack's last task enters unscaled.
LevelPtr make_weighted_level(const TaskStack& stack, double w, const DiscreteSystem& sys);

// K = 1 run of the solver on the scalarized cost. The report's aux costs carry
// the per-task costs of the original stack for comparison.
SolveReport weighted_oc(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U0,
                        const WeightedSpec& spec, const DiscreteSystem& sys,
                        const SolverConfig& cfg,
                        PenaltyState penalties = PenaltyState::defaults(1));

}  // namespace hiertraj
