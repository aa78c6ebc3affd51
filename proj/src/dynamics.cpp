#include "hiertraj/dynamics.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hiertraj/errors.hpp"

namespace hiertraj {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_state_control(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const ArmModel& model) {
  require(x.size() == model.state_dim(), "step: state dimension mismatch");
  require(u.size() == model.control_dim(), "step: control dimension mismatch");
  require(x.allFinite() && u.allFinite(), "step: non-finite input");
}

// Absolute link angles and their trig values.
struct ChainTrig {
  Eigen::VectorXd alpha, c, s;
};

ChainTrig chain_trig(const Eigen::VectorXd& q) {
  const Eigen::Index n = q.size();
  ChainTrig t{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += q(i);
    t.alpha(i) = acc;
    t.c(i) = std::cos(acc);
    t.s(i) = std::sin(acc);
  }
  return t;
}

// Jacobian of the center of mass of link i (2 x n). Column j sums the lever
// arms of every joint j..i that moves the com: full link lengths below link i
// plus the com offset on link i itself.
Eigen::MatrixXd com_jacobian(int i, const ChainTrig& t, const ArmModel& model) {
  const int n = model.link_count();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, n);
  // reach(k) = contribution of rotating about the absolute angle of link k
  for (int k = i; k >= 0; --k) {
    const double w = (k == i) ? model.com_offsets(k) : model.link_lengths(k);
    // e'(alpha_k) = (-sin, cos)
    const double dx = -w * t.s(k);
    const double dy = w * t.c(k);
    for (int j = 0; j <= k; ++j) {
      J(0, j) += dx;
      J(1, j) += dy;
    }
  }
  return J;
}

// Time derivative of com_jacobian: e'(alpha_k) differentiates to
// e''(alpha_k) * alphadot_k = -e(alpha_k) * alphadot_k.
Eigen::MatrixXd com_jacobian_dot(int i, const ChainTrig& t, const Eigen::VectorXd& qdot,
                                 const ArmModel& model) {
  const int n = model.link_count();
  Eigen::VectorXd alphadot(n);
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += qdot(k);
    alphadot(k) = acc;
  }
  Eigen::MatrixXd Jd = Eigen::MatrixXd::Zero(2, n);
  for (int k = i; k >= 0; --k) {
    const double w = (k == i) ? model.com_offsets(k) : model.link_lengths(k);
    const double dx = -w * t.c(k) * alphadot(k);
    const double dy = -w * t.s(k) * alphadot(k);
    for (int j = 0; j <= k; ++j) {
      Jd(0, j) += dx;
      Jd(1, j) += dy;
    }
  }
  return Jd;
}

Eigen::VectorXd forward_accel(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                              const Eigen::VectorXd& u, const ArmModel& model) {
  const Eigen::MatrixXd M = mass_matrix(q, model);
  const Eigen::VectorXd h = bias_forces(q, qdot, model);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("step: singular mass matrix");
  }
  Eigen::VectorXd qdd = ldlt.solve(u - h);
  if (!qdd.allFinite()) {
    throw std::runtime_error("step: singular mass matrix");
  }
  return qdd;
}

}  // namespace

ArmModel ArmModel::uniform(int links, double length, double mass, double damping,
                           double gravity) {
  ArmModel m;
  m.link_lengths = Eigen::VectorXd::Constant(links, length);
  m.link_masses = Eigen::VectorXd::Constant(links, mass);
  m.link_inertias = Eigen::VectorXd::Constant(links, mass * length * length / 12.0);
  m.com_offsets = Eigen::VectorXd::Constant(links, 0.5 * length);
  m.joint_damping = Eigen::VectorXd::Constant(links, damping);
  m.gravity = gravity;
  return m;
}

void ArmModel::validate() const {
  const int n = link_count();
  require(n >= 1, "arm.link_lengths: at least one link required");
  require(link_masses.size() == n, "arm.link_masses: length mismatch");
  require(link_inertias.size() == n, "arm.link_inertias: length mismatch");
  require(com_offsets.size() == n, "arm.com_offsets: length mismatch");
  require(joint_damping.size() == n, "arm.joint_damping: length mismatch");
  require((link_lengths.array() > 0.0).all(), "arm.link_lengths: must be > 0");
  require((link_masses.array() > 0.0).all(), "arm.link_masses: must be > 0");
  require((link_inertias.array() >= 0.0).all(), "arm.link_inertias: must be >= 0");
  require((joint_damping.array() >= 0.0).all(), "arm.joint_damping: must be >= 0");
  require(com_offsets.allFinite(), "arm.com_offsets: non-finite");
  require(std::isfinite(gravity), "arm.gravity: non-finite");
}

void DiscreteSystem::validate() const {
  model.validate();
  require(dt > 0.0, "discretization.dt: must be > 0");
  require(horizon >= 1, "discretization.steps: must be >= 1");
}

Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q, const ArmModel& model) {
  const int n = model.link_count();
  const ChainTrig t = chain_trig(q);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd J = com_jacobian(i, t, model);
    M.noalias() += model.link_masses(i) * J.transpose() * J;
    // rotational inertia: the angular velocity of link i is sum of qdot_0..i
    for (int a = 0; a <= i; ++a)
      for (int b = 0; b <= i; ++b) M(a, b) += model.link_inertias(i);
  }
  return M;
}

Eigen::VectorXd bias_forces(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                            const ArmModel& model) {
  const int n = model.link_count();
  const ChainTrig t = chain_trig(q);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd J = com_jacobian(i, t, model);
    const Eigen::MatrixXd Jd = com_jacobian_dot(i, t, qdot, model);
    // centrifugal/Coriolis from the com translation; the rotational part
    // contributes nothing because the angular-velocity map is constant
    h.noalias() += model.link_masses(i) * J.transpose() * (Jd * qdot);
    // gravity: d/dq of m g y_com
    h.noalias() += model.link_masses(i) * model.gravity * J.row(1).transpose();
  }
  h += model.joint_damping.cwiseProduct(qdot);
  return h;
}

Eigen::VectorXd gravity_compensation(const Eigen::VectorXd& q, const ArmModel& model) {
  const int n = model.link_count();
  require(q.size() == n, "gravity_compensation: q dimension mismatch");
  require(q.allFinite(), "gravity_compensation: non-finite q");
  const ChainTrig t = chain_trig(q);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd J = com_jacobian(i, t, model);
    g.noalias() += model.link_masses(i) * model.gravity * J.row(1).transpose();
  }
  return g;
}

Eigen::Vector2d forward_kinematics(const Eigen::VectorXd& q, int body_point,
                                   const ArmModel& model) {
  require(body_point >= 1 && body_point <= model.link_count(),
          "forward_kinematics: body_point out of range");
  require(q.size() == model.link_count(), "forward_kinematics: q dimension mismatch");
  const ChainTrig t = chain_trig(q);
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k < body_point; ++k) {
    p.x() += model.link_lengths(k) * t.c(k);
    p.y() += model.link_lengths(k) * t.s(k);
  }
  return p;
}

Eigen::MatrixXd body_point_jacobian(const Eigen::VectorXd& q, int body_point,
                                    const ArmModel& model) {
  require(body_point >= 1 && body_point <= model.link_count(),
          "body_point_jacobian: body_point out of range");
  const int n = model.link_count();
  const ChainTrig t = chain_trig(q);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, n);
  for (int k = 0; k < body_point; ++k) {
    const double dx = -model.link_lengths(k) * t.s(k);
    const double dy = model.link_lengths(k) * t.c(k);
    for (int j = 0; j <= k; ++j) {
      J(0, j) += dx;
      J(1, j) += dy;
    }
  }
  return J;
}

Eigen::MatrixXd body_point_jacobian_dot(const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& qdot, int body_point,
                                        const ArmModel& model) {
  require(body_point >= 1 && body_point <= model.link_count(),
          "body_point_jacobian_dot: body_point out of range");
  const int n = model.link_count();
  const ChainTrig t = chain_trig(q);
  Eigen::VectorXd alphadot(n);
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += qdot(k);
    alphadot(k) = acc;
  }
  Eigen::MatrixXd Jd = Eigen::MatrixXd::Zero(2, n);
  for (int k = 0; k < body_point; ++k) {
    const double dx = -model.link_lengths(k) * t.c(k) * alphadot(k);
    const double dy = -model.link_lengths(k) * t.s(k) * alphadot(k);
    for (int j = 0; j <= k; ++j) {
      Jd(0, j) += dx;
      Jd(1, j) += dy;
    }
  }
  return Jd;
}

Eigen::VectorXd continuous_dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    const ArmModel& model) {
  check_state_control(x, u, model);
  const int n = model.link_count();
  const Eigen::VectorXd q = x.head(n);
  const Eigen::VectorXd qdot = x.tail(n);
  Eigen::VectorXd xdot(2 * n);
  xdot.head(n) = qdot;
  xdot.tail(n) = forward_accel(q, qdot, u, model);
  return xdot;
}

ArmPlant::ArmPlant(DiscreteSystem sys) : sys_(std::move(sys)) { sys_.validate(); }

Eigen::VectorXd ArmPlant::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  return hiertraj::step(x, u, sys_);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> ArmPlant::linearize(
    const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  return hiertraj::linearize(x, u, sys_);
}

Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const DiscreteSystem& sys) {
  check_state_control(x, u, sys.model);
  const int n = sys.model.link_count();
  const Eigen::VectorXd q = x.head(n);
  const Eigen::VectorXd qdot = x.tail(n);
  const Eigen::VectorXd qdd = forward_accel(q, qdot, u, sys.model);
  Eigen::VectorXd next(2 * n);
  next.head(n) = q + sys.dt * qdot;
  next.tail(n) = qdot + sys.dt * qdd;
  return next;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u,
                                                      const DiscreteSystem& sys) {
  check_state_control(x, u, sys.model);
  const Eigen::Index n = x.size();
  const Eigen::Index m = u.size();
  const double h = 1e-6;

  Eigen::MatrixXd A(n, n), B(n, m);
  Eigen::VectorXd xp = x, xm = x, up = u, um = u;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp(j) += h;
    xm(j) -= h;
    A.col(j) = (step(xp, u, sys) - step(xm, u, sys)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    up(j) += h;
    um(j) -= h;
    B.col(j) = (step(x, up, sys) - step(x, um, sys)) / (2.0 * h);
    up(j) = u(j);
    um(j) = u(j);
  }
  return {A, B};
}

Eigen::VectorXd simulate_trajectory(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U,
                                    const Plant& plant) {
  const int n = plant.state_dim();
  const int m = plant.control_dim();
  const int N = plant.horizon();
  require(x_s.size() == n, "simulate_trajectory: x_s dimension mismatch");
  require(U.size() == static_cast<Eigen::Index>(m) * N,
          "simulate_trajectory: U dimension mismatch");
  require(x_s.allFinite() && U.allFinite(), "simulate_trajectory: non-finite input");

  Eigen::VectorXd X(static_cast<Eigen::Index>(n) * N);
  Eigen::VectorXd x = x_s;
  for (int t = 0; t < N; ++t) {
    x = plant.step(x, U.segment(static_cast<Eigen::Index>(t) * m, m));
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "rollout diverged at time step " << (t + 1);
      throw DivergenceError(t + 1, os.str());
    }
    X.segment(static_cast<Eigen::Index>(t) * n, n) = x;
  }
  return X;
}

Eigen::VectorXd simulate_trajectory(const Eigen::VectorXd& x_s, const Eigen::VectorXd& U,
                                    const DiscreteSystem& sys) {
  return simulate_trajectory(x_s, U, ArmPlant(sys));
}

Eigen::MatrixXd assemble_G(
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& lin) {
  require(!lin.empty(), "assemble_G: empty linearization");
  const Eigen::Index N = static_cast<Eigen::Index>(lin.size());
  const Eigen::Index n = lin[0].first.rows();
  const Eigen::Index m = lin[0].second.cols();
  for (const auto& [A, B] : lin) {
    require(A.rows() == n && A.cols() == n && B.rows() == n && B.cols() == m,
            "assemble_G: inconsistent block dimensions");
  }

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n * N, m * N);
  for (Eigen::Index tau = 0; tau < N; ++tau) {
    // delta x_{tau+1} <- B_tau, then propagate through A_{tau+1}...A_{N-1}
    G.block(tau * n, tau * m, n, m) = lin[tau].second;
    for (Eigen::Index i = tau + 1; i < N; ++i) {
      G.block(i * n, tau * m, n, m).noalias() =
          lin[i].first * G.block((i - 1) * n, tau * m, n, m);
    }
  }
  return G;
}

LinearizedDynamics linearize_trajectory(const Trajectory& nominal, const Plant& plant) {
  const int n = plant.state_dim();
  const int m = plant.control_dim();
  const int N = plant.horizon();
  LinearizedDynamics out;
  out.A.reserve(N);
  out.B.reserve(N);
  std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> lin;
  lin.reserve(N);
  for (int t = 0; t < N; ++t) {
    const Eigen::VectorXd x =
        (t == 0) ? nominal.x_s
                 : nominal.X.segment(static_cast<Eigen::Index>(t - 1) * n, n);
    const Eigen::VectorXd u = nominal.U.segment(static_cast<Eigen::Index>(t) * m, m);
    lin.push_back(plant.linearize(x, u));
    out.A.push_back(lin.back().first);
    out.B.push_back(lin.back().second);
  }
  out.G = assemble_G(lin);
  return out;
}

}  // namespace hiertraj
