#include "hiertraj/tracker.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "hiertraj/errors.hpp"

namespace hiertraj {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::vector<const ReachTask*> reach_tasks(const TaskStack& stack) {
  std::vector<const ReachTask*> out;
  for (const TaskSpec& t : stack.tasks)
    if (const auto* reach = std::get_if<ReachTask>(&t.kind)) out.push_back(reach);
  return out;
}

}  // namespace

void TrackerConfig::validate() const {
  require((kp.array() >= 0.0).all() && (kd.array() >= 0.0).all(),
          "tracker: gains must be >= 0");
  require(damping >= 0.0, "tracker.damping: must be >= 0");
  require(control_dt > 0.0, "tracker.control_dt: must be > 0");
}

void min_jerk_reference(const Eigen::VectorXd& p0, const Eigen::VectorXd& pf, double T,
                        double t, Eigen::VectorXd& x_r, Eigen::VectorXd& v_r,
                        Eigen::VectorXd& a_r) {
  if (!(T > 0.0)) throw std::invalid_argument("min_jerk_reference: T must be > 0");
  require(p0.size() == pf.size(), "min_jerk_reference: dimension mismatch");
  require(t >= 0.0, "min_jerk_reference: t must be >= 0");
  const Eigen::VectorXd d = pf - p0;
  if (t >= T) {
    x_r = pf;
    v_r = Eigen::VectorXd::Zero(d.size());
    a_r = Eigen::VectorXd::Zero(d.size());
    return;
  }
  const double tau = t / T;
  const double tau2 = tau * tau, tau3 = tau2 * tau, tau4 = tau3 * tau, tau5 = tau4 * tau;
  const double s = 10.0 * tau3 - 15.0 * tau4 + 6.0 * tau5;
  const double sd = (30.0 * tau2 - 60.0 * tau3 + 30.0 * tau4) / T;
  const double sdd = (60.0 * tau - 180.0 * tau2 + 120.0 * tau3) / (T * T);
  x_r = p0 + s * d;
  v_r = sd * d;
  a_r = sdd * d;
}

Eigen::Vector2d pd_accel(const Eigen::Vector2d& x, const Eigen::Vector2d& v,
                         const ReferenceSample& ref, const TrackerConfig& cfg) {
  return ref.a + cfg.kd.cwiseProduct(ref.v - v) + cfg.kp.cwiseProduct(ref.x - x);
}

Eigen::MatrixXd damped_pinv(const Eigen::MatrixXd& J, double lambda) {
  require(J.allFinite(), "damped_pinv: non-finite J");
  const Eigen::Index p = J.rows();
  Eigen::MatrixXd JJt = J * J.transpose();
  JJt.diagonal().array() += lambda * lambda;
  return J.transpose() * JJt.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
}

Eigen::VectorXd controller_step(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                const std::vector<TaskRef>& refs, const ArmModel& model,
                                const TrackerConfig& cfg) {
  const int n = model.link_count();
  require(q.size() == n && qdot.size() == n, "controller_step: dimension mismatch");

  Eigen::VectorXd qdd = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  for (const TaskRef& task : refs) {
    const Eigen::MatrixXd J = body_point_jacobian(q, task.body_point, model);
    const Eigen::MatrixXd Jdot = body_point_jacobian_dot(q, qdot, task.body_point, model);
    const Eigen::Vector2d x = forward_kinematics(q, task.body_point, model);
    const Eigen::Vector2d v = J * qdot;
    const Eigen::Vector2d xdd_star = pd_accel(x, v, task.ref, cfg);

    const Eigen::MatrixXd JP = J * P;
    qdd += damped_pinv(JP, cfg.damping) * (xdd_star - Jdot * qdot - J * qdd);
    P -= truncated_pinv(JP, cfg.projector_pinv) * JP;
  }

  return mass_matrix(q, model) * qdd + bias_forces(q, qdot, model);
}

ReferenceSource make_min_jerk_references(const TaskStack& stack, const Eigen::VectorXd& x0,
                                         double T, const ArmModel& model) {
  const auto tasks = reach_tasks(stack);
  ReferenceSource src;
  std::vector<Eigen::Vector2d> starts, targets;
  for (const ReachTask* t : tasks) {
    src.body_points.push_back(t->body_point);
    starts.push_back(forward_kinematics(x0.head(model.link_count()), t->body_point, model));
    targets.push_back(t->target);
  }
  src.sample = [starts, targets, T](double t) {
    std::vector<ReferenceSample> out(starts.size());
    for (size_t k = 0; k < starts.size(); ++k) {
      Eigen::VectorXd x, v, a;
      min_jerk_reference(starts[k], targets[k], T, t, x, v, a);
      out[k] = {x, v, a};
    }
    return out;
  };
  return src;
}

ReferenceSource make_planned_references(const TaskStack& stack, const Trajectory& planned,
                                        double plan_dt, double control_dt,
                                        const ArmModel& model) {
  require(plan_dt > 0.0 && control_dt > 0.0, "make_planned_references: dt must be > 0");
  const int nl = model.link_count();
  const int n = 2 * nl;
  const int N = static_cast<int>(planned.X.size()) / n;
  require(planned.X.size() == static_cast<Eigen::Index>(n) * N,
          "make_planned_references: trajectory dimension mismatch");

  // q samples at the planner grid, q_0..q_N
  std::vector<Eigen::VectorXd> qs(N + 1);
  qs[0] = planned.x_s.head(nl);
  for (int t = 1; t <= N; ++t)
    qs[t] = planned.X.segment(static_cast<Eigen::Index>(t - 1) * n, nl);

  const double plan_end = N * plan_dt;

  // Catmull-Rom interpolation of q with clamped endpoints.
  auto q_at = [qs, plan_dt, plan_end, N](double t) -> Eigen::VectorXd {
    if (t <= 0.0) return qs[0];
    if (t >= plan_end) return qs[N];
    const double u = t / plan_dt;
    const int i = std::min(static_cast<int>(u), N - 1);
    const double f = u - i;
    const Eigen::VectorXd& p0 = qs[std::max(i - 1, 0)];
    const Eigen::VectorXd& p1 = qs[i];
    const Eigen::VectorXd& p2 = qs[i + 1];
    const Eigen::VectorXd& p3 = qs[std::min(i + 2, N)];
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f * f +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * f * f * f);
  };

  const auto tasks = reach_tasks(stack);
  ReferenceSource src;
  for (const ReachTask* t : tasks) src.body_points.push_back(t->body_point);

  const std::vector<int> bps = src.body_points;
  src.sample = [q_at, bps, model, control_dt, plan_end](double t) {
    std::vector<ReferenceSample> out(bps.size());
    const double h = control_dt;
    const Eigen::VectorXd q0 = q_at(t);
    const Eigen::VectorXd qp = q_at(t + h);
    const Eigen::VectorXd qm = q_at(std::max(t - h, 0.0));
    for (size_t k = 0; k < bps.size(); ++k) {
      const Eigen::Vector2d x = forward_kinematics(q0, bps[k], model);
      if (t >= plan_end) {
        out[k] = {x, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
        continue;
      }
      const Eigen::Vector2d xp = forward_kinematics(qp, bps[k], model);
      const Eigen::Vector2d xm = forward_kinematics(qm, bps[k], model);
      out[k].x = x;
      out[k].v = (xp - xm) / (2.0 * h);
      out[k].a = (xp - 2.0 * x + xm) / (h * h);
    }
    return out;
  };
  return src;
}

TrackingLog closed_loop_sim(const Eigen::VectorXd& x0, const ReferenceSource& refs,
                            const TaskStack& stack, double duration,
                            const TrackerConfig& cfg, const ArmModel& model) {
  cfg.validate();
  require(duration > 0.0, "closed_loop_sim: duration must be > 0");
  const int nl = model.link_count();
  require(x0.size() == 2 * nl, "closed_loop_sim: x0 dimension mismatch");
  const auto tasks = reach_tasks(stack);
  require(tasks.size() == refs.body_points.size(),
          "closed_loop_sim: reference/task count mismatch");

  const int steps = static_cast<int>(std::llround(duration / cfg.control_dt));
  const int K = static_cast<int>(tasks.size());

  TrackingLog log;
  log.times = Eigen::VectorXd(steps + 1);
  log.states = Eigen::MatrixXd(steps + 1, 2 * nl);
  log.controls = Eigen::MatrixXd(steps, nl);
  log.task_errors = Eigen::MatrixXd(steps + 1, K);
  log.task_positions.assign(K, Eigen::MatrixXd(steps + 1, 2));

  Eigen::VectorXd x = x0;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * cfg.control_dt;
    log.times(i) = t;
    log.states.row(i) = x.transpose();
    const Eigen::VectorXd q = x.head(nl);
    for (int k = 0; k < K; ++k) {
      const Eigen::Vector2d p = forward_kinematics(q, tasks[k]->body_point, model);
      log.task_positions[k].row(i) = p.transpose();
      log.task_errors(i, k) = (p - tasks[k]->target).norm();
    }
    if (i == steps) break;

    const std::vector<ReferenceSample> samples = refs.sample(t);
    std::vector<TaskRef> task_refs(K);
    for (int k = 0; k < K; ++k) task_refs[k] = {refs.body_points[k], samples[k]};
    const Eigen::VectorXd u = controller_step(q, x.tail(nl), task_refs, model, cfg);
    log.controls.row(i) = u.transpose();

    const double h = cfg.control_dt;
    if (cfg.integrator == Integrator::euler) {
      x += h * continuous_dynamics(x, u, model);
    } else {
      const Eigen::VectorXd k1 = continuous_dynamics(x, u, model);
      const Eigen::VectorXd k2 = continuous_dynamics(x + 0.5 * h * k1, u, model);
      const Eigen::VectorXd k3 = continuous_dynamics(x + 0.5 * h * k2, u, model);
      const Eigen::VectorXd k4 = continuous_dynamics(x + h * k3, u, model);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "closed loop diverged at t = " << (t + h) << " s";
      throw DivergenceError(i + 1, os.str());
    }
  }
  return log;
}

double oscillation_amplitude(const TrackingLog& log, int task_index, double t_from) {
  require(task_index >= 0 && task_index < static_cast<int>(log.task_positions.size()),
          "oscillation_amplitude: task index out of range");
  const Eigen::MatrixXd& pos = log.task_positions[task_index];
  double amp = 0.0;
  for (int c = 0; c < 2; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < log.times.size(); ++i) {
      if (log.times(i) < t_from) continue;
      lo = std::min(lo, pos(i, c));
      hi = std::max(hi, pos(i, c));
    }
    amp = std::max(amp, hi - lo);
  }
  return amp;
}

}  // namespace hiertraj
