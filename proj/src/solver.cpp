#include "hiertraj/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hiertraj/errors.hpp"
#include "hiertraj/log.hpp"

namespace hiertraj {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

PenaltyState PenaltyState::defaults(int levels, double s0, double r0) {
  PenaltyState p;
  p.s = Eigen::VectorXd::Constant(levels, s0);
  p.r = Eigen::VectorXd::Constant(levels, r0);
  return p;
}

void PenaltyState::validate() const {
  require(s.size() == r.size(), "penalties: s and r length mismatch");
  require((s.array() > 0.0).all() && (r.array() > 0.0).all(),
          "penalties: s_k and r_k must stay > 0");
  require(mu > 1.0, "penalties.mu: must be > 1");
  require(max_tuning_iters >= 1, "penalties.max_tuning_iters: must be >= 1");
}

void SolverConfig::validate() const {
  require(epsilon > 0.0, "solver.epsilon: must be > 0");
  require(abs_cost_threshold > 0.0, "solver.abs_cost_threshold: must be > 0");
  require(rel_cost_threshold > 0.0, "solver.rel_cost_threshold: must be > 0");
  require(pinv.tolerance > 0.0, "solver.pinv_tolerance: must be > 0");
  require(max_main_iters >= 1, "solver.max_main_iters: must be >= 1");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::tuning_exhausted: return "tuning_exhausted";
    case Termination::divergence: return "divergence";
  }
  return "unknown";
}

Eigen::VectorXd SolveReport::final_costs() const {
  return iterations.empty() ? initial_costs : iterations.back().costs;
}

std::pair<double, double> update_penalties(double s_k, double r_k, double mu,
                                           PenaltyDirection dir) {
  require(s_k > 0.0 && r_k > 0.0, "update_penalties: penalties must be > 0");
  require(mu > 1.0, "update_penalties: mu must be > 1");
  const double f = dir == PenaltyDirection::increase ? mu : 1.0 / mu;
  return {s_k * f, r_k * f};
}

double compute_cost_variation(int level_index, const Trajectory& nominal,
                              const Eigen::VectorXd& dU, const Plant& plant,
                              const std::vector<LevelPtr>& levels) {
  require(level_index >= 0 && level_index < static_cast<int>(levels.size()),
          "compute_cost_variation: level index out of range");
  const Eigen::VectorXd U_new = nominal.U + dU;
  const Eigen::VectorXd X_new = simulate_trajectory(nominal.x_s, U_new, plant);
  return levels[level_index]->cost(X_new, U_new) -
         levels[level_index]->cost(nominal.X, nominal.U);
}

double compute_cost_variation(int level_index, const Trajectory& nominal,
                              const Eigen::VectorXd& dU, const DiscreteSystem& sys,
                              const TaskStack& stack) {
  return compute_cost_variation(level_index, nominal, dU, ArmPlant(sys),
                                make_levels(stack, sys));
}

StepResult solver_step(const Plant& plant, const Trajectory& nominal,
                       const Eigen::MatrixXd& G, const std::vector<LevelPtr>& levels,
                       PenaltyState& penalties, const SolverConfig& cfg,
                       bool capture_internals) {
  const int K = static_cast<int>(levels.size());
  const Eigen::Index mN = G.cols();
  require(K >= 1, "solver_step: no levels");
  require(penalties.s.size() == K, "solver_step: penalty state size mismatch");
  require(nominal.U.size() == mN, "solver_step: G and U dimension mismatch");

  const Eigen::MatrixXd GtG = G.transpose() * G;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(mN, mN);

  // nominal level costs, reused by every acceptance check
  Eigen::VectorXd J0(K);
  for (int i = 0; i < K; ++i) J0(i) = levels[i]->cost(nominal.X, nominal.U);

  StepResult res;
  res.dU = Eigen::VectorXd::Zero(mN);
  res.variations.resize(K);
  res.tuning_counts.assign(K, 0);

  Eigen::MatrixXd P = I;
  for (int k = 0; k < K; ++k) {
    const ResidualJacobian rj = levels[k]->residual_jacobian(nominal.X);
    const double e_k = levels[k]->effort_weight();
    const Eigen::MatrixXd H = levels[k]->hessian(nominal.X, cfg.hessian_mode);

    Eigen::MatrixXd T = G.transpose() * H * G;
    T.diagonal().array() += e_k;  // + E_k with E_k = e I
    Eigen::VectorXd d = -(rj.C * G).transpose() * rj.c - e_k * nominal.U;

    // WeightTuningLoop: d and T stay fixed, only S changes with (s_k, r_k)
    bool accepted = false;
    while (!accepted) {
      const Eigen::MatrixXd S = T + penalties.s(k) * GtG + penalties.r(k) * I;
      res.dU = constrained_step(S, P, d, res.dU, cfg.pinv);

      Eigen::VectorXd vars(k + 1);
      bool ok = true;
      try {
        const Eigen::VectorXd U_new = nominal.U + res.dU;
        const Eigen::VectorXd X_new = simulate_trajectory(nominal.x_s, U_new, plant);
        for (int i = 0; i <= k; ++i)
          vars(i) = levels[i]->cost(X_new, U_new) - J0(i);
        ok = (vars.array() <= cfg.epsilon).all();
      } catch (const DivergenceError&) {
        // a blown-up rollout counts as a cost increase
        vars.setConstant(std::numeric_limits<double>::infinity());
        ok = false;
      }

      if (ok) {
        res.variations[k] = vars;
        accepted = true;
      } else {
        std::tie(penalties.s(k), penalties.r(k)) = update_penalties(
            penalties.s(k), penalties.r(k), penalties.mu, PenaltyDirection::increase);
        if (++res.tuning_counts[k] > penalties.max_tuning_iters) {
          std::ostringstream os;
          os << "weight tuning exhausted at level " << (k + 1) << " after "
             << res.tuning_counts[k] << " retries";
          throw TuningExhaustedError(k + 1, os.str());
        }
      }
    }

    const Eigen::MatrixXd TP = T * P;
    P -= truncated_pinv(TP, cfg.pinv) * TP;
    if (capture_internals) {
      res.constraint_mats.push_back(T);
      res.projectors.push_back(P);
    }
  }
  return res;
}

bool stop_criterion(const Eigen::VectorXd& J_prev, const Eigen::VectorXd& J_new,
                    const SolverConfig& cfg) {
  require(J_prev.size() == J_new.size(), "stop_criterion: length mismatch");
  for (Eigen::Index k = 0; k < J_new.size(); ++k) {
    if (J_new(k) < cfg.abs_cost_threshold) continue;
    if (J_prev(k) == 0.0) {
      if (J_new(k) == 0.0) continue;
      return false;
    }
    if (std::abs(J_new(k) - J_prev(k)) / std::abs(J_prev(k)) < cfg.rel_cost_threshold)
      continue;
    return false;
  }
  return true;
}

SolveReport prioritized_oc(const Plant& plant, const Eigen::VectorXd& x_s,
                           const Eigen::VectorXd& U0, const std::vector<LevelPtr>& levels,
                           const SolverConfig& cfg, PenaltyState penalties,
                           const AuxCostFn& aux_costs) {
  cfg.validate();
  penalties.validate();
  const int K = static_cast<int>(levels.size());
  require(K >= 1, "prioritized_oc: no levels");
  require(penalties.s.size() == K, "prioritized_oc: penalty state size mismatch");
  require(U0.allFinite(), "prioritized_oc: non-finite U0");

  SolveReport report;
  Trajectory nominal{x_s, Eigen::VectorXd(), U0, false};
  try {
    nominal.X = simulate_trajectory(x_s, U0, plant);
    nominal.consistent = true;
  } catch (const DivergenceError& e) {
    report.termination = Termination::divergence;
    report.divergence_time = e.time_index();
    report.message = e.what();
    report.trajectory = nominal;
    return report;
  }

  Eigen::VectorXd J = level_costs(levels, nominal.X, nominal.U);
  report.initial_costs = J;
  if (aux_costs) report.initial_aux_costs = aux_costs(nominal.X, nominal.U);

  std::vector<int> decrease_counts(K, 0);
  report.termination = Termination::max_iters;
  for (int iter = 0; iter < cfg.max_main_iters; ++iter) {
    const LinearizedDynamics lin = linearize_trajectory(nominal, plant);

    StepResult sr;
    try {
      sr = solver_step(plant, nominal, lin.G, levels, penalties, cfg);
    } catch (const TuningExhaustedError& e) {
      report.termination = Termination::tuning_exhausted;
      report.failed_level = e.level();
      report.message = e.what();
      break;
    }

    Eigen::VectorXd U_new = nominal.U + sr.dU;
    Eigen::VectorXd X_new;
    try {
      X_new = simulate_trajectory(x_s, U_new, plant);
    } catch (const DivergenceError& e) {
      report.termination = Termination::divergence;
      report.divergence_time = e.time_index();
      report.message = e.what();
      break;
    }
    const Eigen::VectorXd J_new = level_costs(levels, X_new, U_new);

    IterationRecord rec;
    rec.costs = J_new;
    if (aux_costs) rec.aux_costs = aux_costs(X_new, U_new);
    rec.s = penalties.s;
    rec.r = penalties.r;
    rec.tuning_counts = sr.tuning_counts;
    rec.variations = sr.variations;
    rec.step_norm = sr.dU.norm();
    report.iterations.push_back(std::move(rec));

    nominal.X = std::move(X_new);
    nominal.U = std::move(U_new);
    nominal.consistent = true;

    HIERTRAJ_TRACE("iter " << (iter + 1) << " costs " << J_new.transpose()
                           << " |dU| " << sr.dU.norm());

    if (stop_criterion(J, J_new, cfg)) {
      report.termination = Termination::converged;
      break;
    }

    // between-iteration relaxation: a level whose cost kept decreasing gets
    // its penalties divided back by mu; the next step's acceptance test
    // re-validates them
    for (int k = 0; k < K; ++k) {
      if (J_new(k) < J(k) && decrease_counts[k] < penalties.max_tuning_iters) {
        std::tie(penalties.s(k), penalties.r(k)) = update_penalties(
            penalties.s(k), penalties.r(k), penalties.mu, PenaltyDirection::decrease);
        ++decrease_counts[k];
      }
    }
    J = J_new;
  }

  report.trajectory = nominal;
  if (report.message.empty()) report.message = to_string(report.termination);
  return report;
}

SolveReport prioritized_oc(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U0,
                           const TaskStack& stack, const DiscreteSystem& sys,
                           const SolverConfig& cfg) {
  const ArmPlant plant(sys);
  return prioritized_oc(plant, x_s, U0, make_levels(stack, sys), cfg,
                        PenaltyState::defaults(stack.size()));
}

}  // namespace hiertraj
