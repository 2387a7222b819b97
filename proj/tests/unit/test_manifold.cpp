#include <doctest.h>

#include "oracles.hpp"
#include "stiefelcd/error.hpp"
#include "stiefelcd/manifold.hpp"

using namespace stiefelcd;

TEST_CASE("stiefel point validation and repair") {
  Rng rng(1);
  Eigen::MatrixXd x = oracle::random_stiefel(rng, 8, 3);
  CHECK(orthonormality_error(StiefelPoint(x).matrix()) <= 1e-14);
  Eigen::MatrixXd drift = x;
  drift(0, 0) += 1e-8;
  CHECK(orthonormality_error(StiefelPoint(drift).matrix()) <= 1e-12);
  Eigen::MatrixXd bad = x;
  bad(0, 0) += 1e-3;
  CHECK_THROWS_AS(StiefelPoint{bad}, InputError);
  CHECK_THROWS_AS(StiefelPoint{Eigen::MatrixXd::Identity(3, 3)}, InputError);
}

TEST_CASE("tangent projection") {
  Rng rng(2);
  const StiefelPoint x(oracle::random_stiefel(rng, 10, 3));
  const Eigen::MatrixXd v = rng.normal_matrix(10, 3);
  const Eigen::MatrixXd eta = tangent_project(x, v).matrix();
  CHECK(tangency_error(x, eta) <= 1e-10);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd w = oracle::random_tangent(rng, x.matrix(), 1.0);
    CHECK(std::abs(((v - eta).array() * w.array()).sum()) <= 1e-12);
  }
  CHECK((tangent_project(x, eta).matrix() - eta).norm() <= 1e-12);
  CHECK(tangent_project(x, x.matrix()).norm() <= 1e-12);
  const Eigen::MatrixXd w = rng.normal_matrix(10, 3);
  const double lhs = (tangent_project(x, v).matrix().array() * w.array()).sum();
  const double rhs = (v.array() * tangent_project(x, w).matrix().array()).sum();
  CHECK(std::abs(lhs - rhs) <= 1e-12);
  CHECK_THROWS_AS(TangentVector(x, v), InputError);
}

TEST_CASE("retraction basics") {
  Rng rng(3);
  const StiefelPoint x(oracle::random_stiefel(rng, 12, 4));
  CHECK((retract(x, Eigen::MatrixXd::Zero(12, 4)).matrix() - x.matrix()).norm() <= 1e-12);

  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 1);
  e1(0, 0) = 1.0;
  const double t = 0.3;
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(3, 1);
  eta(1, 0) = t;
  const Eigen::MatrixXd y = retract(StiefelPoint(e1), eta).matrix();
  Eigen::Vector3d expect(1.0, t, 0.0);
  expect /= std::sqrt(1.0 + t * t);
  CHECK((y.col(0) - expect).norm() <= 1e-14);
}

TEST_CASE("retraction agrees with X + eta to second order") {
  Rng rng(4);
  const StiefelPoint x(oracle::random_stiefel(rng, 15, 3));
  const Eigen::MatrixXd dir = oracle::random_tangent(rng, x.matrix(), 1.0);
  // Ratio ||R(t d) - (X + t d)|| / t^2 must stay bounded as t shrinks.
  std::vector<double> ratios;
  for (double t = 1e-1; t >= 1e-4; t /= 10) {
    const Eigen::MatrixXd y = retract(x, t * dir).matrix();
    ratios.push_back((y - x.matrix() - t * dir).norm() / (t * t));
  }
  for (double r : ratios) CHECK(r <= 2.0 * ratios.front() + 1e-6);
  CHECK(ratios.back() > 0.0);
}

TEST_CASE("retraction rejects rank deficient input") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
  x(0, 0) = 1.0;
  CHECK_THROWS_AS(retract(StiefelPoint(x), -x), RetractionDomainError);
}

TEST_CASE("lyapunov solver") {
  Rng rng(5);
  const Eigen::MatrixXd b = rng.normal_matrix(5, 5) + 5.0 * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd c = rng.normal_matrix(5, 5);
  const Eigen::MatrixXd s = solve_lyapunov(b, c);
  CHECK((b * s + s * b.transpose() - c).norm() <= 1e-12 * c.norm());
}

TEST_CASE("inverse retraction") {
  Rng rng(6);
  const StiefelPoint x(oracle::random_stiefel(rng, 20, 4));
  CHECK(inverse_retract(x, x).norm() <= 1e-12);

  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd eta0 = oracle::random_tangent(rng, x.matrix(), 0.1 * rng.uniform());
    const StiefelPoint y = retract(x, eta0);
    CHECK((inverse_retract(x, y).matrix() - eta0).norm() <= 1e-8);
  }

  // q = 1: S = 1 / x^T y.
  const Eigen::MatrixXd x1 = oracle::random_stiefel(rng, 6, 1);
  Eigen::MatrixXd y1 = x1 + 0.3 * rng.normal_matrix(6, 1);
  y1 /= y1.norm();
  const double s = 1.0 / x1.col(0).dot(y1.col(0));
  CHECK((inverse_retract(StiefelPoint(x1), StiefelPoint(y1)).matrix() - (s * y1 - x1)).norm() <= 1e-13);

  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 1);
  e1(0, 0) = 1.0;
  Eigen::MatrixXd e2 = Eigen::MatrixXd::Zero(3, 1);
  e2(1, 0) = 1.0;
  CHECK_THROWS_AS(inverse_retract(StiefelPoint(e1), StiefelPoint(e2)), RetractionDomainError);
}

TEST_CASE("feasible projection worked example") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  const FeasiblePoint y = feasible_project(StiefelPoint(x));
  // Hand evaluation: q = (1,1)/sqrt2, Y = 1~ q^T + X (I - q q^T).
  const double a = 1.0 / std::sqrt(6.0);
  Eigen::MatrixXd expect(3, 2);
  expect << a + 0.5, a - 0.5, a - 0.5, a + 0.5, a, a;
  CHECK((y.matrix() - expect).norm() <= 1e-12);
  CHECK(y.matrix()(0, 0) == doctest::Approx(0.9082).epsilon(1e-4));
  CHECK(y.matrix()(0, 1) == doctest::Approx(-0.0918).epsilon(1e-3));
  CHECK(orthonormality_error(y.matrix()) <= 1e-12);
  CHECK(y.certificate() <= 1e-12);
}

TEST_CASE("feasible projection is idempotent, deterministic and nearest") {
  Rng rng(7);
  const FeasiblePoint f(StiefelPoint(oracle::random_feasible(rng, 30, 4)));
  CHECK((feasible_project(f.point()).matrix() - f.matrix()).norm() <= 1e-10);

  const StiefelPoint x(oracle::random_stiefel(rng, 50, 5));
  const FeasiblePoint y = feasible_project(x);
  CHECK(y.certificate() <= 1e-8);
  CHECK((feasible_project(x).matrix().array() == y.matrix().array()).all());
  const double dist = (x.matrix() - y.matrix()).norm();
  for (int t = 0; t < 100; ++t) {
    CHECK(dist <= (x.matrix() - oracle::random_feasible(rng, 50, 5)).norm() + 1e-12);
  }
}

TEST_CASE("feasible projection degenerate fallback") {
  // Columns orthogonal to the all-ones vector.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 2);
  x(0, 0) = x(1, 1) = 1.0 / std::sqrt(2.0);
  x(1, 0) = x(0, 1) = -1.0 / std::sqrt(2.0);
  x.col(1) << 0.0, 0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  x.col(0) << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0, 0.0;
  const FeasiblePoint y = feasible_project(StiefelPoint(x));
  CHECK((y.matrix().col(0) - x.col(0)).norm() <= 1e-14);
  CHECK((y.matrix().col(1) - Eigen::VectorXd::Constant(4, 0.5)).norm() <= 1e-14);
}

TEST_CASE("feasible point rejects infeasible input") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
  x(0, 0) = 1.0;
  CHECK_THROWS_AS(FeasiblePoint(StiefelPoint(x)), InputError);
}
