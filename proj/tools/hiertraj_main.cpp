// Experiment runner: loads a JSON config, dispatches solver / baseline /
// tracker runs, writes reports and plot-ready CSV.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hiertraj/baseline.hpp"
#include "hiertraj/config.hpp"
#include "hiertraj/errors.hpp"
#include "hiertraj/log.hpp"
#include "hiertraj/report_io.hpp"
#include "hiertraj/solver.hpp"
#include "hiertraj/tracker.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitDivergence = 3;

int exit_code_for(hiertraj::Termination t) {
  switch (t) {
    case hiertraj::Termination::converged: return kExitOk;
    case hiertraj::Termination::max_iters:
    case hiertraj::Termination::tuning_exhausted: return kExitNotConverged;
    case hiertraj::Termination::divergence: return kExitDivergence;
  }
  return kExitValidation;
}

void write_error_record(const std::string& out_dir, int code, const std::string& kind,
                        const std::string& message) {
  try {
    hiertraj::write_json_atomic(out_dir + "/error.json",
                                json{{"code", code}, {"kind", kind}, {"message", message}});
  } catch (const std::exception&) {
    // the error record is best effort; the exit code carries the outcome
  }
}

struct RunContext {
  hiertraj::ExperimentConfig cfg;
  std::string out_dir;
};

hiertraj::SolveReport run_prioritized(const RunContext& ctx) {
  const hiertraj::DiscreteSystem sys = ctx.cfg.system();
  const hiertraj::ArmPlant plant(sys);
  const Eigen::VectorXd x0 = ctx.cfg.initial_state();
  const Eigen::VectorXd u_hold =
      hiertraj::gravity_compensation(x0.head(sys.model.link_count()), sys.model);
  Eigen::VectorXd U0(sys.model.control_dim() * sys.horizon);
  for (int t = 0; t < sys.horizon; ++t)
    U0.segment(static_cast<Eigen::Index>(t) * sys.model.control_dim(),
               sys.model.control_dim()) = u_hold;

  auto levels = hiertraj::make_levels(ctx.cfg.stack, sys);
  return hiertraj::prioritized_oc(plant, x0, U0, levels, ctx.cfg.solver,
                                  ctx.cfg.penalties(ctx.cfg.stack.size()));
}

hiertraj::SolveReport run_weighted(const RunContext& ctx, double w) {
  const hiertraj::DiscreteSystem sys = ctx.cfg.system();
  const Eigen::VectorXd x0 = ctx.cfg.initial_state();
  const Eigen::VectorXd u_hold =
      hiertraj::gravity_compensation(x0.head(sys.model.link_count()), sys.model);
  Eigen::VectorXd U0(sys.model.control_dim() * sys.horizon);
  for (int t = 0; t < sys.horizon; ++t)
    U0.segment(static_cast<Eigen::Index>(t) * sys.model.control_dim(),
               sys.model.control_dim()) = u_hold;

  hiertraj::WeightedSpec spec{ctx.cfg.stack, w};
  return hiertraj::weighted_oc(x0, U0, spec, sys, ctx.cfg.solver, ctx.cfg.penalties(1));
}

std::string weight_tag(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", w);
  std::string tag(buf);
  for (char& c : tag)
    if (c == '+' || c == '.') c = '_';
  return tag;
}

int cmd_solve(const RunContext& ctx) {
  const hiertraj::SolveReport report = run_prioritized(ctx);
  hiertraj::write_json_atomic(ctx.out_dir + "/report.json",
                              hiertraj::report_to_json(report, ctx.cfg, "prioritized"));
  hiertraj::write_text_atomic(ctx.out_dir + "/trajectory.csv",
                              hiertraj::trajectory_to_csv(report.trajectory, ctx.cfg.system()));
  HIERTRAJ_INFO("solve: " << report.message << " after " << report.iteration_count()
                          << " iterations");
  const int code = exit_code_for(report.termination);
  if (code != kExitOk) write_error_record(ctx.out_dir, code, "solver", report.message);
  return code;
}

int cmd_baseline(const RunContext& ctx, const std::vector<double>& weights) {
  int worst = kExitOk;
  for (double w : weights) {
    const hiertraj::SolveReport report = run_weighted(ctx, w);
    const std::string tag = weight_tag(w);
    hiertraj::write_json_atomic(ctx.out_dir + "/report_w" + tag + ".json",
                                hiertraj::report_to_json(report, ctx.cfg, "weighted", w));
    hiertraj::write_text_atomic(
        ctx.out_dir + "/trajectory_w" + tag + ".csv",
        hiertraj::trajectory_to_csv(report.trajectory, ctx.cfg.system()));
    HIERTRAJ_INFO("baseline w=" << w << ": " << report.message << " after "
                                << report.iteration_count() << " iterations");
    worst = std::max(worst, exit_code_for(report.termination));
  }
  if (worst != kExitOk) write_error_record(ctx.out_dir, worst, "solver", "baseline run(s) did not converge");
  return worst;
}

int cmd_track(const RunContext& ctx) {
  const hiertraj::DiscreteSystem sys = ctx.cfg.system();
  const Eigen::VectorXd x0 = ctx.cfg.initial_state();

  const hiertraj::SolveReport plan = run_prioritized(ctx);
  HIERTRAJ_INFO("track: planner " << plan.message << " after " << plan.iteration_count()
                                  << " iterations");
  if (plan.termination == hiertraj::Termination::divergence) {
    write_error_record(ctx.out_dir, kExitDivergence, "solver", plan.message);
    return kExitDivergence;
  }

  const auto raw_refs = hiertraj::make_min_jerk_references(
      ctx.cfg.stack, x0, ctx.cfg.tracker.reference_duration, sys.model);
  const auto plan_refs = hiertraj::make_planned_references(
      ctx.cfg.stack, plan.trajectory, sys.dt, ctx.cfg.tracker.control_dt, sys.model);

  json summary;
  try {
    const hiertraj::TrackingLog raw = hiertraj::closed_loop_sim(
        x0, raw_refs, ctx.cfg.stack, ctx.cfg.tracker.duration,
        ctx.cfg.tracker.make_config(ctx.cfg.tracker.damping_raw), sys.model);
    const hiertraj::TrackingLog planned = hiertraj::closed_loop_sim(
        x0, plan_refs, ctx.cfg.stack, ctx.cfg.tracker.duration,
        ctx.cfg.tracker.make_config(ctx.cfg.tracker.damping_planned), sys.model);

    hiertraj::write_text_atomic(ctx.out_dir + "/track_raw_states.csv",
                                hiertraj::tracking_states_to_csv(raw, sys.model.link_count()));
    hiertraj::write_text_atomic(ctx.out_dir + "/track_raw_errors.csv",
                                hiertraj::tracking_errors_to_csv(raw));
    hiertraj::write_text_atomic(
        ctx.out_dir + "/track_planned_states.csv",
        hiertraj::tracking_states_to_csv(planned, sys.model.link_count()));
    hiertraj::write_text_atomic(ctx.out_dir + "/track_planned_errors.csv",
                                hiertraj::tracking_errors_to_csv(planned));

    const double window = ctx.cfg.tracker.duration - 0.3;
    summary["oscillation_raw"] = hiertraj::oscillation_amplitude(raw, 0, window);
    summary["oscillation_planned"] = hiertraj::oscillation_amplitude(planned, 0, window);
    summary["final_errors_raw"] = std::vector<double>(
        raw.task_errors.row(raw.task_errors.rows() - 1).begin(),
        raw.task_errors.row(raw.task_errors.rows() - 1).end());
    summary["final_errors_planned"] = std::vector<double>(
        planned.task_errors.row(planned.task_errors.rows() - 1).begin(),
        planned.task_errors.row(planned.task_errors.rows() - 1).end());
  } catch (const hiertraj::DivergenceError& e) {
    write_error_record(ctx.out_dir, kExitDivergence, "tracker", e.what());
    return kExitDivergence;
  }
  const Eigen::VectorXd plan_errors =
      hiertraj::final_task_errors(plan.trajectory, ctx.cfg.stack, sys);
  summary["planner_terminal_errors"] =
      std::vector<double>(plan_errors.begin(), plan_errors.end());
  summary["planner_termination"] = hiertraj::to_string(plan.termination);
  hiertraj::write_json_atomic(ctx.out_dir + "/track_summary.json", summary);
  return exit_code_for(plan.termination);
}

int cmd_compare(const RunContext& ctx, const std::vector<double>& weights) {
  const hiertraj::DiscreteSystem sys = ctx.cfg.system();
  int worst = kExitOk;

  const hiertraj::SolveReport pri = run_prioritized(ctx);
  worst = std::max(worst, exit_code_for(pri.termination));
  hiertraj::write_json_atomic(ctx.out_dir + "/report.json",
                              hiertraj::report_to_json(pri, ctx.cfg, "prioritized"));
  const Eigen::VectorXd pri_err = hiertraj::final_task_errors(pri.trajectory, ctx.cfg.stack, sys);

  struct Column {
    std::string name;
    Eigen::VectorXd errors;
    int iterations;
  };
  std::vector<Column> cols;
  for (double w : weights) {
    const hiertraj::SolveReport rep = run_weighted(ctx, w);
    worst = std::max(worst, exit_code_for(rep.termination));
    hiertraj::write_json_atomic(ctx.out_dir + "/report_w" + weight_tag(w) + ".json",
                                hiertraj::report_to_json(rep, ctx.cfg, "weighted", w));
    cols.push_back({"w=" + weight_tag(w),
                    hiertraj::final_task_errors(rep.trajectory, ctx.cfg.stack, sys),
                    rep.iteration_count()});
  }
  cols.push_back({"prioritized", pri_err, pri.iteration_count()});

  // side-by-side summary, one row per task error plus an iterations row
  std::string table = "metric";
  for (const Column& c : cols) table += "," + c.name;
  table += '\n';
  json jrows = json::array();
  const int K = static_cast<int>(pri_err.size());
  for (int k = 0; k < K; ++k) {
    table += "task" + std::to_string(k + 1) + "_err_m";
    json row{{"metric", "task" + std::to_string(k + 1) + "_err_m"}};
    for (const Column& c : cols) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", c.errors(k));
      table += std::string(",") + buf;
      row[c.name] = c.errors(k);
    }
    table += '\n';
    jrows.push_back(row);
  }
  table += "iterations";
  json itrow{{"metric", "iterations"}};
  for (const Column& c : cols) {
    table += "," + std::to_string(c.iterations);
    itrow[c.name] = c.iterations;
  }
  table += '\n';
  jrows.push_back(itrow);

  hiertraj::write_text_atomic(ctx.out_dir + "/compare.csv", table);
  hiertraj::write_json_atomic(ctx.out_dir + "/compare.json", jrows);
  std::fputs(table.c_str(), stdout);
  if (worst != kExitOk)
    write_error_record(ctx.out_dir, worst, "solver", "one or more runs did not converge");
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prioritized trajectory optimization for planar arms"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::vector<double> weight_override;
  std::optional<std::uint64_t> seed_override;
  std::string hessian_override;

  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_override, "output directory (overrides config)");
  app.add_option("--seed", seed_override, "random seed (overrides config)");
  app.add_option("--hessian", hessian_override, "hessian mode: gauss_newton or full")
      ->check(CLI::IsMember({"gauss_newton", "full"}));

  CLI::App* solve = app.add_subcommand("solve", "run the prioritized solver");
  CLI::App* baseline = app.add_subcommand("baseline", "run the weighted baseline");
  baseline->add_option("--weight", weight_override, "weight w (repeatable)");
  CLI::App* track = app.add_subcommand("track", "closed-loop tracking, both reference modes");
  CLI::App* compare = app.add_subcommand("compare", "prioritized vs weighted summary table");

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  try {
    ctx.cfg = hiertraj::load_config(config_path);
  } catch (const hiertraj::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    if (!out_override.empty())
      write_error_record(out_override, kExitValidation, "validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitValidation;
  }

  if (!out_override.empty()) ctx.cfg.output_dir = out_override;
  if (seed_override) ctx.cfg.seed = *seed_override;
  if (!hessian_override.empty())
    ctx.cfg.solver.hessian_mode = hessian_override == "full" ? hiertraj::HessianMode::full
                                                             : hiertraj::HessianMode::gauss_newton;
  ctx.out_dir = ctx.cfg.output_dir;
  std::filesystem::create_directories(ctx.out_dir);

  try {
    if (solve->parsed()) return cmd_solve(ctx);
    if (baseline->parsed()) {
      const std::vector<double>& weights =
          weight_override.empty() ? ctx.cfg.baseline_weights : weight_override;
      return cmd_baseline(ctx, weights);
    }
    if (track->parsed()) return cmd_track(ctx);
    if (compare->parsed()) return cmd_compare(ctx, ctx.cfg.baseline_weights);
  } catch (const hiertraj::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    write_error_record(ctx.out_dir, kExitDivergence, "divergence", e.what());
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    write_error_record(ctx.out_dir, kExitValidation, "validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    write_error_record(ctx.out_dir, kExitValidation, "internal", e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
