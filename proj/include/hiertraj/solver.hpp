#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "hiertraj/dynamics.hpp"
#include "hiertraj/linalg.hpp"
#include "hiertraj/tasks.hpp"

namespace hiertraj {

// Trust-region penalties per priority level. The tuning loop multiplies a
// level's pair by mu on rejection; the between-iteration policy divides it
// back while that task's cost keeps decreasing.
struct PenaltyState {
  Eigen::VectorXd s;  // state-deviation penalties
  Eigen::VectorXd r;  // control-deviation penalties
  double mu = 1.5;
  int max_tuning_iters = 50;

  static PenaltyState defaults(int levels, double s0 = 1.0, double r0 = 1e-2);
  void validate() const;
};

struct SolverConfig {
  double epsilon = 1e-6;             // tolerated cost increase per level
  double abs_cost_threshold = 1e-6;  // convergence: absolute cost
  double rel_cost_threshold = 1e-2;  // convergence: relative improvement
  PinvConfig pinv;
  int max_main_iters = 100;
  HessianMode hessian_mode = HessianMode::gauss_newton;

  void validate() const;
};

enum class Termination { converged, max_iters, tuning_exhausted, divergence };

const char* to_string(Termination t);

struct IterationRecord {
  Eigen::VectorXd costs;      // level costs after the accepted step
  Eigen::VectorXd aux_costs;  // optional per-task bookkeeping (weighted runs)
  Eigen::VectorXd s, r;       // penalties after the step's tuning
  std::vector<int> tuning_counts;             // retries per level
  std::vector<Eigen::VectorXd> variations;    // variations[k](i) = delta g_i at
                                              // acceptance of level k (i <= k)
  double step_norm = 0.0;
};

struct SolveReport {
  Termination termination = Termination::max_iters;
  std::string message;
  int failed_level = -1;     // 1-based, set for tuning_exhausted
  int divergence_time = -1;  // set for divergence
  Eigen::VectorXd initial_costs;
  Eigen::VectorXd initial_aux_costs;
  std::vector<IterationRecord> iterations;
  Trajectory trajectory;

  int iteration_count() const { return static_cast<int>(iterations.size()); }
  Eigen::VectorXd final_costs() const;
};

enum class PenaltyDirection { increase, decrease };

// Scale (s_k, r_k) by mu (increase) or 1/mu (decrease).
std::pair<double, double> update_penalties(double s_k, double r_k, double mu,
                                           PenaltyDirection dir);

// True nonlinear cost variation of one level:
// g_i(rollout(U + dU), U + dU) - g_i(X, U). Throws DivergenceError if the
// perturbed rollout blows up.
double compute_cost_variation(int level_index, const Trajectory& nominal,
                              const Eigen::VectorXd& dU, const Plant& plant,
                              const std::vector<LevelPtr>& levels);
double compute_cost_variation(int level_index, const Trajectory& nominal,
                              const Eigen::VectorXd& dU, const DiscreteSystem& sys,
                              const TaskStack& stack);

struct StepResult {
  Eigen::VectorXd dU;
  std::vector<Eigen::VectorXd> variations;  // per level, delta g_1..delta g_k
  std::vector<int> tuning_counts;
  // populated when capture_internals is set
  std::vector<Eigen::MatrixXd> constraint_mats;  // T per level
  std::vector<Eigen::MatrixXd> projectors;       // P after each level
};

// One resolution of the linearized hierarchy. Mutates `penalties` (the tuned
// values persist across main iterations). Throws TuningExhaustedError when a
// level cannot be accepted within max_tuning_iters.
StepResult solver_step(const Plant& plant, const Trajectory& nominal,
                       const Eigen::MatrixXd& G, const std::vector<LevelPtr>& levels,
                       PenaltyState& penalties, const SolverConfig& cfg,
                       bool capture_internals = false);

// Every task must have converged: absolute cost below threshold, or relative
// improvement below threshold (J_prev == 0 counts as converged iff J_new == 0).
bool stop_criterion(const Eigen::VectorXd& J_prev, const Eigen::VectorXd& J_new,
                    const SolverConfig& cfg);

using AuxCostFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& X,
                                                const Eigen::VectorXd& U)>;

// Main iteration: linearize, resolve the hierarchy, roll out, re-cost, test
// convergence. Non-convergence is reported, not thrown.
SolveReport prioritized_oc(const Plant& plant, const Eigen::VectorXd& x_s,
                           const Eigen::VectorXd& U0, const std::vector<LevelPtr>& levels,
                           const SolverConfig& cfg, PenaltyState penalties,
                           const AuxCostFn& aux_costs = {});

// Stack-based convenience entry point.
SolveReport prioritized_oc(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U0,
                           const TaskStack& stack, const DiscreteSystem& sys,
                           const SolverConfig& cfg);

}  // namespace hiertraj
