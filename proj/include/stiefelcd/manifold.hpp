#pragma once

#include <Eigen/Core>

namespace stiefelcd {

/// n x q matrix with orthonormal columns, q < n.
///
/// Construction checks ||X^T X - I||_F. Drift up to 1e-6 is repaired with a
/// thin QR (R diagonal made positive); anything worse is rejected.
class StiefelPoint {
 public:
  static constexpr double kTolerance = 1e-10;
  static constexpr double kRepairLimit = 1e-6;

  explicit StiefelPoint(Eigen::MatrixXd x);

  const Eigen::MatrixXd& matrix() const noexcept { return x_; }
  Eigen::Index rows() const noexcept { return x_.rows(); }
  Eigen::Index cols() const noexcept { return x_.cols(); }

 private:
  Eigen::MatrixXd x_;
};

/// ||X^T X - I||_F
double orthonormality_error(const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Element of the tangent space T_X St(q, n), i.e. X^T V + V^T X = 0.
/// The base point is not stored; it is checked once at construction.
class TangentVector {
 public:
  TangentVector(const StiefelPoint& base, Eigen::MatrixXd v);

  /// Skips the tangency check. For callers that just produced `v` by a
  /// construction that is tangent up to rounding.
  static TangentVector unchecked(Eigen::MatrixXd v);

  const Eigen::MatrixXd& matrix() const noexcept { return v_; }
  double norm() const { return v_.norm(); }

 private:
  explicit TangentVector(Eigen::MatrixXd v) : v_(std::move(v)) {}
  Eigen::MatrixXd v_;
};

/// ||X^T V + V^T X||_F
double tangency_error(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& v);

/// Stiefel point whose column span contains the all-ones vector.
class FeasiblePoint {
 public:
  static constexpr double kTolerance = 1e-8;

  explicit FeasiblePoint(StiefelPoint x);

  const StiefelPoint& point() const noexcept { return x_; }
  const Eigen::MatrixXd& matrix() const noexcept { return x_.matrix(); }
  /// ||(I - X X^T) 1/sqrt(n)||_2
  double certificate() const noexcept { return certificate_; }

 private:
  StiefelPoint x_;
  double certificate_;
};

double feasibility_certificate(const Eigen::Ref<const Eigen::MatrixXd>& x);

/// V - X sym(X^T V).
TangentVector tangent_project(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& v);

/// QR + SVD retraction: [Q, R] = qr(X + eta), R = U S V^T, result Q U V^T.
/// Throws RetractionDomainError when the smallest singular value of R is
/// below 1e-12.
StiefelPoint retract(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& eta);

/// eta = Y S - X where (X^T Y) S + S (Y^T X) = 2 I. Throws
/// RetractionDomainError when the Lyapunov system is singular.
TangentVector inverse_retract(const StiefelPoint& x, const StiefelPoint& y);

/// Solves B S + S B^T = C for square B by complex Schur reduction.
Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& b,
                               const Eigen::Ref<const Eigen::MatrixXd>& c);

/// Closest point of the feasible set in Frobenius norm:
///   Y = 1~ q^T + X (I - q q^T),  q = X^T 1~ / ||X^T 1~||,  1~ = 1 / sqrt(n).
/// If ||X^T 1~|| <= 1e-12 the last basis vector e_q is used for q.
FeasiblePoint feasible_project(const StiefelPoint& x);

}  // namespace stiefelcd
