#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "hiertraj/baseline.hpp"
#include "canonical.hpp"
#include "test_util.hpp"

using namespace hiertraj;
using test::random_vector;

namespace {

DiscreteSystem small_arm() {
  ArmModel m;
  m.link_lengths = Eigen::Vector2d(0.5, 0.5);
  m.link_masses = Eigen::Vector2d(1.0, 1.0);
  m.com_offsets = Eigen::Vector2d(0.25, 0.25);
  m.link_inertias = Eigen::Vector2d(1.0 / 48.0, 1.0 / 48.0);
  m.joint_damping = Eigen::Vector2d(0.1, 0.1);
  return {m, 0.02, 20};
}

}  // namespace

TEST_CASE("scalarized cost equals w^2 g1 + w g2 + g3 on random trajectories") {
  const DiscreteSystem sys = small_arm();
  TaskStack stack;
  stack.tasks = {TaskSpec{1, ReachTask{2, {0.6, 0.3}, 20}},
                 TaskSpec{2, ReachTask{1, {-0.2, 0.4}, 20}},
                 TaskSpec{3, ReachTask{2, {0.0, 0.9}, 15}}};
  const double w = 37.0;
  const LevelPtr level = make_weighted_level(stack, w, sys);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd X = random_vector(rng, sys.model.state_dim() * sys.horizon);
    const Eigen::VectorXd U = random_vector(rng, sys.model.control_dim() * sys.horizon);
    const Eigen::VectorXd g = compute_costs(stack, X, U, sys);
    const double want = w * w * g(0) + w * g(1) + g(2);
    CHECK(level->cost(X, U) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("effort enters the scalarized level unweighted") {
  const DiscreteSystem sys = small_arm();
  TaskStack stack;
  stack.tasks = {TaskSpec{1, ReachTask{2, {0.6, 0.3}, 20}},
                 TaskSpec{2, ReachTask{1, {-0.2, 0.4}, 20}},
                 TaskSpec{3, EffortTask{1e-3}}};
  const double w = 12.0;
  const LevelPtr level = make_weighted_level(stack, w, sys);

  std::mt19937_64 rng(9);
  const Eigen::VectorXd X = random_vector(rng, sys.model.state_dim() * sys.horizon);
  const Eigen::VectorXd U = random_vector(rng, sys.model.control_dim() * sys.horizon);
  const Eigen::VectorXd g = compute_costs(stack, X, U, sys);
  CHECK(level->cost(X, U) == doctest::Approx(w * g(0) + g(1) + g(2)).epsilon(1e-12));
  CHECK(level->effort_weight() == doctest::Approx(1e-3).epsilon(1e-15));
}

TEST_CASE("w = 1 single task reproduces the prioritized trajectory") {
  const DiscreteSystem sys = small_arm();
  TaskStack stack;
  stack.tasks = {TaskSpec{1, ReachTask{2, {0.5, 0.5}, 20}}};

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd U0 = test::gravity_hold_controls(sys, x0);
  SolverConfig cfg;

  const SolveReport pri = prioritized_oc(x0, U0, stack, sys, cfg);
  const SolveReport wgt = weighted_oc(x0, U0, WeightedSpec{stack, 1.0}, sys, cfg);

  REQUIRE(pri.termination == Termination::converged);
  REQUIRE(wgt.termination == Termination::converged);
  CHECK(pri.iteration_count() == wgt.iteration_count());
  CHECK((pri.trajectory.U - wgt.trajectory.U).norm() == 0.0);
}

TEST_CASE("larger weight drives the primary error down") {
  const DiscreteSystem sys = small_arm();
  // two conflicting reach tasks on a 2-DoF arm
  TaskStack stack;
  stack.tasks = {TaskSpec{1, ReachTask{2, {0.55, 0.45}, 20}},
                 TaskSpec{2, ReachTask{1, {-0.3, 0.35}, 20}},
                 TaskSpec{3, EffortTask{1e-4}}};

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd U0 = test::gravity_hold_controls(sys, x0);
  SolverConfig cfg;
  cfg.max_main_iters = 150;

  auto err1 = [&](const SolveReport& rep) {
    const Eigen::VectorXd q_N = rep.trajectory.X.segment(4 * (sys.horizon - 1), 2);
    return (forward_kinematics(q_N, 2, sys.model) - Eigen::Vector2d(0.55, 0.45)).norm();
  };

  const SolveReport low = weighted_oc(x0, U0, WeightedSpec{stack, 1.0}, sys, cfg);
  const SolveReport high = weighted_oc(x0, U0, WeightedSpec{stack, 100.0}, sys, cfg);
  CHECK(err1(high) < err1(low));

  // per-task bookkeeping is attached to every iteration
  REQUIRE(!high.iterations.empty());
  CHECK(high.iterations.back().aux_costs.size() == 3);
  CHECK(high.initial_aux_costs.size() == 3);
}
