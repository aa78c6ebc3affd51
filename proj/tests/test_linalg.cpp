#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "hiertraj/linalg.hpp"
#include "test_util.hpp"

using namespace hiertraj;
using test::random_low_rank;
using test::random_matrix;
using test::random_vector;

TEST_CASE("truncated_pinv: identity") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  CHECK((truncated_pinv(I) - I).norm() < 1e-12);
}

TEST_CASE("truncated_pinv: zero matrix") {
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 3);
  const Eigen::MatrixXd P = truncated_pinv(Z);
  CHECK(P.rows() == 3);
  CHECK(P.cols() == 2);
  CHECK(P.norm() == 0.0);
}

TEST_CASE("truncated_pinv: cutoff forces rank truncation") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(0, 0) = 1.0;
  M(1, 1) = 1e-9;
  const Eigen::MatrixXd P = truncated_pinv(M, {1e-5});
  CHECK(P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(P(1, 1) == 0.0);  // 1e-9 <= 1e-5 * 1 is dropped
}

TEST_CASE("truncated_pinv: non-finite input rejected") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(truncated_pinv(M), std::invalid_argument);
  CHECK_THROWS_AS(truncated_pinv(Eigen::MatrixXd::Identity(2, 2), {-1.0}),
                  std::invalid_argument);
}

TEST_CASE("truncated_pinv: Moore-Penrose identities on random matrices") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<int> size(1, 30);
    const int p = size(rng), q = size(rng);
    const int max_rank = std::min(p, q);
    std::uniform_int_distribution<int> rank_dist(1, max_rank);
    const Eigen::MatrixXd M = (trial % 2 == 0)
                                  ? random_matrix(rng, p, q)
                                  : random_low_rank(rng, p, q, rank_dist(rng));
    const Eigen::MatrixXd P = truncated_pinv(M);
    const double scale = std::max(M.norm(), 1.0);
    CHECK((M * P * M - M).norm() <= 1e-8 * scale);
    CHECK((P * M * P - P).norm() <= 1e-8 * std::max(P.norm(), 1.0));
    CHECK((M * P - (M * P).transpose()).norm() <= 1e-8 * scale);
    CHECK((P * M - (P * M).transpose()).norm() <= 1e-8 * scale);
  }
}

TEST_CASE("nullspace_projector: full-rank square matrix has trivial nullspace") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd M =
      random_matrix(rng, 3, 3) + 3.0 * Eigen::MatrixXd::Identity(3, 3);
  CHECK(nullspace_projector(M).norm() < 1e-10);
}

TEST_CASE("nullspace_projector: zero matrix projects onto everything") {
  const Eigen::MatrixXd P = nullspace_projector(Eigen::MatrixXd::Zero(2, 3));
  CHECK((P - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("nullspace_projector: analytic 1x2 case") {
  Eigen::MatrixXd M(1, 2);
  M << 1.0, 0.0;
  const Eigen::MatrixXd P = nullspace_projector(M);
  Eigen::MatrixXd want(2, 2);
  want << 0.0, 0.0, 0.0, 1.0;
  CHECK((P - want).norm() < 1e-12);
}

TEST_CASE("nullspace_projector: annihilation and idempotence on random matrices") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> size(1, 25);
    const int p = size(rng), q = size(rng);
    std::uniform_int_distribution<int> rank_dist(1, std::min(p, q));
    const Eigen::MatrixXd M = random_low_rank(rng, p, q, rank_dist(rng));
    const Eigen::MatrixXd P = nullspace_projector(M);
    CHECK((M * P).norm() <= 1e-8 * std::max(M.norm(), 1e-30));
    CHECK((P * P - P).norm() <= 1e-8);
    CHECK((P - P.transpose()).norm() <= 1e-8);
  }
}

TEST_CASE("constrained_step: reduces to the unconstrained solve at P = I") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd A = random_matrix(rng, 4, 4);
  const Eigen::MatrixXd S = A.transpose() * A + Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd d = random_vector(rng, 4);
  const Eigen::VectorXd v = constrained_step(S, Eigen::MatrixXd::Identity(4, 4), d,
                                             Eigen::VectorXd::Zero(4));
  CHECK((S * v - d).norm() < 1e-9);
}

TEST_CASE("constrained_step: zero residual leaves du unchanged") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd S = random_matrix(rng, 3, 3);
  const Eigen::VectorXd du = random_vector(rng, 3);
  const Eigen::VectorXd d = S * du;
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
  CHECK((constrained_step(S, P, d, du) - du).norm() < 1e-10);
}

TEST_CASE("constrained_step: hand-evaluated projected update") {
  // S = diag(2,2), P = diag(1,0), d = (4,4), du = 0:
  // SP = diag(2,0), (SP)^+ = diag(1/2, 0), result (2, 0)
  Eigen::MatrixXd S = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2, 2);
  P(0, 0) = 1.0;
  Eigen::VectorXd d(2);
  d << 4.0, 4.0;
  const Eigen::VectorXd v = constrained_step(S, P, d, Eigen::VectorXd::Zero(2));
  CHECK(v(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constrained_step: residual orthogonal to range(SP)") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int q = 8;
    const Eigen::MatrixXd A = random_matrix(rng, q, q);
    const Eigen::MatrixXd S = A.transpose() * A + 0.1 * Eigen::MatrixXd::Identity(q, q);
    const Eigen::MatrixXd P = nullspace_projector(random_low_rank(rng, 3, q, 2));
    const Eigen::VectorXd d = random_vector(rng, q);
    const Eigen::VectorXd du = random_vector(rng, q, 0.1);
    const Eigen::VectorXd v = constrained_step(S, P, d, du);
    const Eigen::VectorXd res = S * v - d;
    // projection of the residual onto range(SP) must vanish
    CHECK(((S * P).transpose() * res).norm() <= 1e-8 * std::max(1.0, d.norm() * S.norm()));
  }
}

TEST_CASE("constrained_step: dimension mismatch rejected") {
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(
      constrained_step(S, P, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)),
      std::invalid_argument);
}
