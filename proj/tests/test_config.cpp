#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "hiertraj/config.hpp"
#include "hiertraj/report_io.hpp"
#include "canonical.hpp"
#include "test_util.hpp"

using namespace hiertraj;
using nlohmann::json;

namespace {

json canonical_json() { return config_to_json(test::canonical_config()); }

}  // namespace

TEST_CASE("defaults reproduce the documented algorithm constants") {
  const ExperimentConfig cfg = config_from_json(canonical_json());
  CHECK(cfg.penalty_s == 1.0);
  CHECK(cfg.penalty_r == 1e-2);
  CHECK(cfg.mu == 1.5);
  CHECK(cfg.solver.epsilon == 1e-6);
  CHECK(cfg.solver.abs_cost_threshold == 1e-6);
  CHECK(cfg.solver.rel_cost_threshold == 1e-2);
  CHECK(cfg.solver.pinv.tolerance == 1e-5);
  CHECK(cfg.dt == 0.02);
  CHECK(cfg.horizon == 50);
}

TEST_CASE("config round-trip is lossless") {
  const ExperimentConfig cfg = test::canonical_config();
  const json j = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
}

TEST_CASE("the shipped canonical config matches the in-code instance") {
  const std::filesystem::path path =
      std::filesystem::path(HIERTRAJ_SOURCE_DIR) / "configs" / "canonical.json";
  REQUIRE(std::filesystem::exists(path));
  const ExperimentConfig shipped = load_config(path.string());
  CHECK(config_to_json(shipped) == canonical_json());
}

TEST_CASE("validation errors carry the field path") {
  json j = canonical_json();
  j["discretization"]["dt"] = -0.5;
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("discretization.dt") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected") {
  json j = canonical_json();
  j["solver"]["typo_field"] = 1.0;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  json top = canonical_json();
  top["unexpected"] = 1;
  CHECK_THROWS_AS(config_from_json(top), ConfigError);
}

TEST_CASE("task validation failures name the offending entry") {
  json j = canonical_json();
  j["tasks"][0]["body_point"] = 9;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  json j2 = canonical_json();
  j2["tasks"][3]["type"] = "unknown";
  CHECK_THROWS_AS(config_from_json(j2), ConfigError);
}

TEST_CASE("report round-trip reproduces cost vectors bitwise") {
  const ExperimentConfig cfg = test::canonical_config();
  DiscreteSystem sys = cfg.system();
  sys.horizon = 10;
  ExperimentConfig small = cfg;
  small.horizon = 10;
  TaskStack stack = cfg.stack;
  for (TaskSpec& t : stack.tasks)
    if (auto* reach = std::get_if<ReachTask>(&t.kind)) reach->window_start = 10;
  small.stack = stack;

  SolverConfig scfg = cfg.solver;
  scfg.max_main_iters = 5;
  const Eigen::VectorXd x0 = cfg.initial_state();
  const SolveReport report =
      prioritized_oc(x0, test::gravity_hold_controls(sys, x0), stack, sys, scfg);

  const json j = report_to_json(report, small, "prioritized");
  const SolveReport back = report_from_json(j);

  REQUIRE(back.iteration_count() == report.iteration_count());
  CHECK((back.initial_costs - report.initial_costs).norm() == 0.0);
  for (int i = 0; i < report.iteration_count(); ++i) {
    CHECK((back.iterations[i].costs - report.iterations[i].costs).norm() == 0.0);
    CHECK((back.iterations[i].s - report.iterations[i].s).norm() == 0.0);
    CHECK((back.iterations[i].r - report.iterations[i].r).norm() == 0.0);
    REQUIRE(back.iterations[i].variations.size() == report.iterations[i].variations.size());
    for (size_t k = 0; k < report.iterations[i].variations.size(); ++k)
      CHECK((back.iterations[i].variations[k] - report.iterations[i].variations[k]).norm() ==
            0.0);
  }
  CHECK((back.trajectory.U - report.trajectory.U).norm() == 0.0);
  CHECK((back.trajectory.X - report.trajectory.X).norm() == 0.0);
  CHECK(back.termination == report.termination);
}

TEST_CASE("trajectory CSV round-trips at 17 significant digits") {
  std::mt19937_64 rng(3);
  ArmModel m = ArmModel::uniform(2, 0.5, 1.0, 0.1);
  const DiscreteSystem sys{m, 0.02, 4};
  Trajectory traj;
  traj.x_s = test::random_vector(rng, 4);
  traj.X = test::random_vector(rng, 16);
  traj.U = test::random_vector(rng, 8);

  const std::string csv = trajectory_to_csv(traj, sys);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,q1,q2,dq1,dq2,u1,u2");

  // parse back and compare bitwise
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  REQUIRE(rows.size() == 5);
  for (int t = 1; t <= 4; ++t) {
    for (int i = 0; i < 4; ++i) CHECK(rows[t][1 + i] == traj.X(4 * (t - 1) + i));
  }
  for (int i = 0; i < 4; ++i) CHECK(rows[0][1 + i] == traj.x_s(i));
  // row 0 carries u_0, the final row repeats u_{N-1}
  CHECK(rows[0][5] == traj.U(0));
  CHECK(rows[4][5] == traj.U(6));
}

TEST_CASE("atomic write replaces the target in one shot") {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "hiertraj_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "file.txt").string();
  write_text_atomic(path, "first");
  write_text_atomic(path, "second");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "second");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("final_task_errors reports one norm per reach task") {
  const ExperimentConfig cfg = test::canonical_config();
  const DiscreteSystem sys = cfg.system();
  Trajectory traj;
  traj.x_s = cfg.initial_state();
  traj.U = Eigen::VectorXd::Zero(3 * 50);
  traj.X = Eigen::VectorXd::Zero(6 * 50);
  for (int t = 1; t <= 50; ++t) traj.X.segment(6 * (t - 1), 6) = traj.x_s;

  const Eigen::VectorXd errs = final_task_errors(traj, cfg.stack, sys);
  REQUIRE(errs.size() == 3);
  const Eigen::VectorXd q0 = traj.x_s.head(3);
  CHECK(errs(0) == doctest::Approx((forward_kinematics(q0, 3, sys.model) -
                                    Eigen::Vector2d(0.9, 0.6))
                                       .norm())
                       .epsilon(1e-12));
}
