#include "hiertraj/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace hiertraj {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void reject_unknown_keys(const json& j, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd v(j.size());
  Eigen::Index i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) fail(path, "expected an array of numbers");
    v(i++) = e.get<double>();
  }
  return v;
}

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ArmModel arm_from_json(const json& j) {
  reject_unknown_keys(j, "arm",
                      {"link_lengths", "link_masses", "link_inertias", "com_offsets",
                       "joint_damping", "gravity"});
  ArmModel m;
  if (!j.contains("link_lengths")) fail("arm.link_lengths", "missing");
  m.link_lengths = get_vector(j.at("link_lengths"), "arm.link_lengths");
  const int n = static_cast<int>(m.link_lengths.size());
  auto vec_or = [&](const char* key, double def) {
    if (!j.contains(key)) return Eigen::VectorXd::Constant(n, def).eval();
    const json& e = j.at(key);
    if (e.is_number()) return Eigen::VectorXd::Constant(n, e.get<double>()).eval();
    return get_vector(e, std::string("arm.") + key);
  };
  m.link_masses = vec_or("link_masses", 1.0);
  m.com_offsets = j.contains("com_offsets")
                      ? vec_or("com_offsets", 0.0)
                      : (0.5 * m.link_lengths).eval();
  m.link_inertias = j.contains("link_inertias")
                        ? vec_or("link_inertias", 0.0)
                        : (m.link_masses.array() * m.link_lengths.array().square() / 12.0)
                              .matrix()
                              .eval();
  m.joint_damping = vec_or("joint_damping", 0.0);
  m.gravity = j.contains("gravity") ? get_number(j.at("gravity"), "arm.gravity") : 9.81;
  return m;
}

json arm_to_json(const ArmModel& m) {
  return json{{"link_lengths", to_json(m.link_lengths)},
              {"link_masses", to_json(m.link_masses)},
              {"link_inertias", to_json(m.link_inertias)},
              {"com_offsets", to_json(m.com_offsets)},
              {"joint_damping", to_json(m.joint_damping)},
              {"gravity", m.gravity}};
}

TaskStack tasks_from_json(const json& j, int horizon) {
  if (!j.is_array()) fail("tasks", "expected an array");
  TaskStack stack;
  int idx = 0;
  for (const auto& e : j) {
    const std::string path = "tasks[" + std::to_string(idx++) + "]";
    if (!e.is_object()) fail(path, "expected an object");
    if (!e.contains("type")) fail(path + ".type", "missing");
    const std::string type = e.at("type").get<std::string>();
    TaskSpec spec;
    if (!e.contains("priority")) fail(path + ".priority", "missing");
    spec.priority = get_int(e.at("priority"), path + ".priority");
    if (type == "reach") {
      reject_unknown_keys(e, path, {"type", "priority", "body_point", "target", "window_start"});
      ReachTask reach;
      if (!e.contains("body_point")) fail(path + ".body_point", "missing");
      reach.body_point = get_int(e.at("body_point"), path + ".body_point");
      if (!e.contains("target")) fail(path + ".target", "missing");
      const Eigen::VectorXd t = get_vector(e.at("target"), path + ".target");
      if (t.size() != 2) fail(path + ".target", "expected 2 coordinates");
      reach.target = t;
      reach.window_start = e.contains("window_start")
                               ? get_int(e.at("window_start"), path + ".window_start")
                               : horizon;
      spec.kind = reach;
    } else if (type == "effort") {
      reject_unknown_keys(e, path, {"type", "priority", "weight"});
      EffortTask effort;
      effort.weight =
          e.contains("weight") ? get_number(e.at("weight"), path + ".weight") : 1e-4;
      spec.kind = effort;
    } else {
      fail(path + ".type", "must be \"reach\" or \"effort\"");
    }
    stack.tasks.push_back(spec);
  }
  return stack;
}

json tasks_to_json(const TaskStack& stack) {
  json a = json::array();
  for (const TaskSpec& t : stack.tasks) {
    if (const auto* reach = std::get_if<ReachTask>(&t.kind)) {
      a.push_back(json{{"type", "reach"},
                       {"priority", t.priority},
                       {"body_point", reach->body_point},
                       {"target", {reach->target.x(), reach->target.y()}},
                       {"window_start", reach->window_start}});
    } else {
      const auto& effort = std::get<EffortTask>(t.kind);
      a.push_back(
          json{{"type", "effort"}, {"priority", t.priority}, {"weight", effort.weight}});
    }
  }
  return a;
}

}  // namespace

TrackerConfig TrackerSettings::make_config(double damping) const {
  TrackerConfig cfg;
  cfg.kp = Eigen::Vector2d::Constant(kp);
  cfg.kd = Eigen::Vector2d::Constant(kd);
  cfg.damping = damping;
  cfg.control_dt = control_dt;
  cfg.integrator = integrator;
  return cfg;
}

DiscreteSystem ExperimentConfig::system() const { return {arm, dt, horizon}; }

Eigen::VectorXd ExperimentConfig::initial_state() const {
  const int nl = arm.link_count();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2 * nl);
  if (initial_q.size() > 0) x0.head(nl) = initial_q;
  if (initial_dq.size() > 0) x0.tail(nl) = initial_dq;
  return x0;
}

PenaltyState ExperimentConfig::penalties(int levels) const {
  PenaltyState p = PenaltyState::defaults(levels, penalty_s, penalty_r);
  p.mu = mu;
  p.max_tuning_iters = max_tuning_iters;
  return p;
}

void ExperimentConfig::validate() const {
  system().validate();
  if (initial_q.size() > 0 && initial_q.size() != arm.link_count())
    throw ConfigError("initial_state.q: length mismatch with arm.link_lengths");
  if (initial_dq.size() > 0 && initial_dq.size() != arm.link_count())
    throw ConfigError("initial_state.dq: length mismatch with arm.link_lengths");
  try {
    solver.validate();
    if (!stack.tasks.empty()) stack.validate(system());
    penalties(std::max(stack.size(), 1)).validate();
    tracker.make_config(tracker.damping_raw).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (tracker.damping_raw < 0.0) throw ConfigError("tracker.damping_raw: must be >= 0");
  if (tracker.damping_planned < 0.0)
    throw ConfigError("tracker.damping_planned: must be >= 0");
  if (tracker.duration <= 0.0) throw ConfigError("tracker.duration: must be > 0");
  if (tracker.reference_duration <= 0.0)
    throw ConfigError("tracker.reference_duration: must be > 0");
  for (double w : baseline_weights)
    if (!(w > 0.0)) throw ConfigError("baseline_weights: must be > 0");
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown_keys(j, "",
                      {"arm", "discretization", "initial_state", "tasks", "solver",
                       "penalties", "baseline_weights", "tracker", "output_dir", "seed"});
  ExperimentConfig cfg;
  if (j.contains("arm")) cfg.arm = arm_from_json(j.at("arm"));
  if (j.contains("discretization")) {
    const json& d = j.at("discretization");
    reject_unknown_keys(d, "discretization", {"dt", "steps"});
    if (d.contains("dt")) cfg.dt = get_number(d.at("dt"), "discretization.dt");
    if (d.contains("steps")) cfg.horizon = get_int(d.at("steps"), "discretization.steps");
  }
  if (j.contains("initial_state")) {
    const json& s = j.at("initial_state");
    reject_unknown_keys(s, "initial_state", {"q", "dq"});
    if (s.contains("q")) cfg.initial_q = get_vector(s.at("q"), "initial_state.q");
    if (s.contains("dq")) cfg.initial_dq = get_vector(s.at("dq"), "initial_state.dq");
  }
  if (j.contains("tasks")) cfg.stack = tasks_from_json(j.at("tasks"), cfg.horizon);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown_keys(s, "solver",
                        {"epsilon", "abs_cost_threshold", "rel_cost_threshold",
                         "pinv_tolerance", "max_main_iters", "hessian_mode"});
    if (s.contains("epsilon")) cfg.solver.epsilon = get_number(s.at("epsilon"), "solver.epsilon");
    if (s.contains("abs_cost_threshold"))
      cfg.solver.abs_cost_threshold =
          get_number(s.at("abs_cost_threshold"), "solver.abs_cost_threshold");
    if (s.contains("rel_cost_threshold"))
      cfg.solver.rel_cost_threshold =
          get_number(s.at("rel_cost_threshold"), "solver.rel_cost_threshold");
    if (s.contains("pinv_tolerance"))
      cfg.solver.pinv.tolerance = get_number(s.at("pinv_tolerance"), "solver.pinv_tolerance");
    if (s.contains("max_main_iters"))
      cfg.solver.max_main_iters = get_int(s.at("max_main_iters"), "solver.max_main_iters");
    if (s.contains("hessian_mode")) {
      const std::string mode = s.at("hessian_mode").get<std::string>();
      if (mode == "gauss_newton") cfg.solver.hessian_mode = HessianMode::gauss_newton;
      else if (mode == "full") cfg.solver.hessian_mode = HessianMode::full;
      else fail("solver.hessian_mode", "must be \"gauss_newton\" or \"full\"");
    }
  }
  if (j.contains("penalties")) {
    const json& p = j.at("penalties");
    reject_unknown_keys(p, "penalties", {"s", "r", "mu", "max_tuning_iters"});
    if (p.contains("s")) cfg.penalty_s = get_number(p.at("s"), "penalties.s");
    if (p.contains("r")) cfg.penalty_r = get_number(p.at("r"), "penalties.r");
    if (p.contains("mu")) cfg.mu = get_number(p.at("mu"), "penalties.mu");
    if (p.contains("max_tuning_iters"))
      cfg.max_tuning_iters = get_int(p.at("max_tuning_iters"), "penalties.max_tuning_iters");
  }
  if (j.contains("baseline_weights")) {
    const Eigen::VectorXd w = get_vector(j.at("baseline_weights"), "baseline_weights");
    cfg.baseline_weights.assign(w.data(), w.data() + w.size());
  }
  if (j.contains("tracker")) {
    const json& t = j.at("tracker");
    reject_unknown_keys(t, "tracker",
                        {"kp", "kd", "damping_raw", "damping_planned", "control_dt",
                         "duration", "reference_duration", "integrator"});
    if (t.contains("kp")) cfg.tracker.kp = get_number(t.at("kp"), "tracker.kp");
    if (t.contains("kd")) cfg.tracker.kd = get_number(t.at("kd"), "tracker.kd");
    if (t.contains("damping_raw"))
      cfg.tracker.damping_raw = get_number(t.at("damping_raw"), "tracker.damping_raw");
    if (t.contains("damping_planned"))
      cfg.tracker.damping_planned =
          get_number(t.at("damping_planned"), "tracker.damping_planned");
    if (t.contains("control_dt"))
      cfg.tracker.control_dt = get_number(t.at("control_dt"), "tracker.control_dt");
    if (t.contains("duration"))
      cfg.tracker.duration = get_number(t.at("duration"), "tracker.duration");
    if (t.contains("reference_duration"))
      cfg.tracker.reference_duration =
          get_number(t.at("reference_duration"), "tracker.reference_duration");
    if (t.contains("integrator")) {
      const std::string integ = t.at("integrator").get<std::string>();
      if (integ == "euler") cfg.tracker.integrator = Integrator::euler;
      else if (integ == "rk4") cfg.tracker.integrator = Integrator::rk4;
      else fail("tracker.integrator", "must be \"euler\" or \"rk4\"");
    }
  }
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["arm"] = arm_to_json(cfg.arm);
  j["discretization"] = {{"dt", cfg.dt}, {"steps", cfg.horizon}};
  const Eigen::VectorXd x0 = cfg.initial_state();
  const int nl = cfg.arm.link_count();
  j["initial_state"] = {{"q", to_json(x0.head(nl))}, {"dq", to_json(x0.tail(nl))}};
  j["tasks"] = tasks_to_json(cfg.stack);
  j["solver"] = {{"epsilon", cfg.solver.epsilon},
                 {"abs_cost_threshold", cfg.solver.abs_cost_threshold},
                 {"rel_cost_threshold", cfg.solver.rel_cost_threshold},
                 {"pinv_tolerance", cfg.solver.pinv.tolerance},
                 {"max_main_iters", cfg.solver.max_main_iters},
                 {"hessian_mode", cfg.solver.hessian_mode == HessianMode::gauss_newton
                                      ? "gauss_newton"
                                      : "full"}};
  j["penalties"] = {{"s", cfg.penalty_s},
                    {"r", cfg.penalty_r},
                    {"mu", cfg.mu},
                    {"max_tuning_iters", cfg.max_tuning_iters}};
  j["baseline_weights"] = cfg.baseline_weights;
  j["tracker"] = {{"kp", cfg.tracker.kp},
                  {"kd", cfg.tracker.kd},
                  {"damping_raw", cfg.tracker.damping_raw},
                  {"damping_planned", cfg.tracker.damping_planned},
                  {"control_dt", cfg.tracker.control_dt},
                  {"duration", cfg.tracker.duration},
                  {"reference_duration", cfg.tracker.reference_duration},
                  {"integrator", cfg.tracker.integrator == Integrator::euler ? "euler" : "rk4"}};
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not readable: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace hiertraj
