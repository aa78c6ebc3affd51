#include "hiertraj/linalg.hpp"

#include <Eigen/SVD>

#include <stdexcept>

namespace hiertraj {

namespace {

void check_finite(const Eigen::MatrixXd& M, const char* name) {
  if (!M.allFinite()) {
    throw std::invalid_argument(std::string(name) + ": non-finite entries");
  }
}

void check_tolerance(const PinvConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) {
    throw std::invalid_argument("PinvConfig.tolerance must be > 0");
  }
}

}  // namespace

Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& M, const PinvConfig& cfg) {
  check_finite(M, "truncated_pinv: M");
  check_tolerance(cfg);
  if (M.rows() == 0 || M.cols() == 0) {
    return Eigen::MatrixXd::Zero(M.cols(), M.rows());
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  // sigma_max == 0 means M == 0; the pseudoinverse is the zero matrix.
  const double cutoff = cfg.tolerance * sigma_max;

  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd nullspace_projector(const Eigen::MatrixXd& M, const PinvConfig& cfg) {
  check_finite(M, "nullspace_projector: M");
  const Eigen::Index q = M.cols();
  return Eigen::MatrixXd::Identity(q, q) - truncated_pinv(M, cfg) * M;
}

Eigen::VectorXd constrained_step(const Eigen::MatrixXd& S, const Eigen::MatrixXd& P,
                                 const Eigen::VectorXd& d, const Eigen::VectorXd& du,
                                 const PinvConfig& cfg) {
  const Eigen::Index q = S.cols();
  if (S.rows() != q || P.rows() != q || P.cols() != q || d.size() != S.rows() ||
      du.size() != q) {
    throw std::invalid_argument("constrained_step: dimension mismatch");
  }
  check_finite(S, "constrained_step: S");
  check_finite(P, "constrained_step: P");
  check_finite(d, "constrained_step: d");
  check_finite(du, "constrained_step: du");

  return du + truncated_pinv(S * P, cfg) * (d - S * du);
}

}  // namespace hiertraj
