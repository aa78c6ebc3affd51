#pragma once

#include <Eigen/Core>

namespace hiertraj {

// Relative singular-value cutoff used by every pseudoinverse in the cascade.
// Singular values sigma_i <= tolerance * sigma_max are treated as zero.
struct PinvConfig {
  double tolerance = 1e-5;
};

// Moore-Penrose pseudoinverse with rank truncation by SVD.
Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& M, const PinvConfig& cfg = {});

// P = I - M^+ M, the orthogonal projector onto the nullspace of M.
Eigen::MatrixXd nullspace_projector(const Eigen::MatrixXd& M, const PinvConfig& cfg = {});

// du + (S P)^+ (d - S du): the constrained update step shared by all
// cascade levels. The increment lies in range(P) up to rank truncation.
Eigen::VectorXd constrained_step(const Eigen::MatrixXd& S, const Eigen::MatrixXd& P,
                                 const Eigen::VectorXd& d, const Eigen::VectorXd& du,
                                 const PinvConfig& cfg = {});

}  // namespace hiertraj
