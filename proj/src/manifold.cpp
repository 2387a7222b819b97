#include "stiefelcd/manifold.hpp"

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "stiefelcd/error.hpp"

namespace stiefelcd {

namespace {

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  // Sign convention diag(R) > 0 keeps Q close to A when A is nearly orthonormal.
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

void require_shape(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& v, const char* what) {
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", got " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()));
  }
}

}  // namespace

double orthonormality_error(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  return (gram - Eigen::MatrixXd::Identity(x.cols(), x.cols())).norm();
}

StiefelPoint::StiefelPoint(Eigen::MatrixXd x) : x_(std::move(x)) {
  if (x_.cols() < 1 || x_.cols() >= x_.rows()) {
    throw DimensionError("Stiefel point needs 1 <= q < n, got " + std::to_string(x_.rows()) + "x" +
                         std::to_string(x_.cols()));
  }
  const double err = orthonormality_error(x_);
  if (!(err <= kTolerance)) {
    if (!(err <= kRepairLimit)) {
      throw InputError("matrix is not orthonormal (||X^T X - I|| = " + std::to_string(err) + ")");
    }
    x_ = thin_q(x_);
  }
}

TangentVector::TangentVector(const StiefelPoint& base, Eigen::MatrixXd v) : v_(std::move(v)) {
  require_shape(base, v_, "tangent vector");
  const double err = tangency_error(base, v_);
  if (!(err <= 1e-9 * (1.0 + v_.norm()))) {
    throw InputError("matrix is not tangent at the base point (||X^T V + V^T X|| = " + std::to_string(err) + ")");
  }
}

TangentVector TangentVector::unchecked(Eigen::MatrixXd v) { return TangentVector(std::move(v)); }

double tangency_error(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& v) {
  const Eigen::MatrixXd xtv = x.matrix().transpose() * v;
  return (xtv + xtv.transpose()).norm();
}

double feasibility_certificate(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(x.rows(), 1.0 / std::sqrt(n));
  return (one - x * (x.transpose() * one)).norm();
}

FeasiblePoint::FeasiblePoint(StiefelPoint x) : x_(std::move(x)), certificate_(feasibility_certificate(x_.matrix())) {
  if (!(certificate_ <= kTolerance)) {
    throw InputError("all-ones vector is not in the column span (certificate " + std::to_string(certificate_) + ")");
  }
}

TangentVector tangent_project(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& v) {
  require_shape(x, v, "tangent_project");
  const Eigen::MatrixXd xtv = x.matrix().transpose() * v;
  const Eigen::MatrixXd sym = 0.5 * (xtv + xtv.transpose());
  return TangentVector::unchecked(v - x.matrix() * sym);
}

StiefelPoint retract(const StiefelPoint& x, const Eigen::Ref<const Eigen::MatrixXd>& eta) {
  require_shape(x, eta, "retract");
  const Eigen::MatrixXd moved = x.matrix() + eta;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(moved);
  const Eigen::Index q = x.cols();
  const Eigen::MatrixXd qfactor = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), q);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() < 1e-12) {
    throw RetractionDomainError("retraction input X + eta is rank deficient");
  }
  Eigen::MatrixXd u = svd.matrixU();
  Eigen::MatrixXd v = svd.matrixV();
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::Index at = 0;
    u.col(j).cwiseAbs().maxCoeff(&at);
    if (u(at, j) < 0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  return StiefelPoint(qfactor * (u * v.transpose()));
}

Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& b, const Eigen::Ref<const Eigen::MatrixXd>& c) {
  using Complex = std::complex<double>;
  const Eigen::Index q = b.rows();
  if (b.cols() != q || c.rows() != q || c.cols() != q) throw DimensionError("Lyapunov operands must be square and equal size");

  Eigen::ComplexSchur<Eigen::MatrixXd> schur(b);
  if (schur.info() != Eigen::Success) throw RetractionDomainError("Schur decomposition failed");
  const Eigen::MatrixXcd& t = schur.matrixT();
  const Eigen::MatrixXcd& u = schur.matrixU();
  const Eigen::MatrixXcd rhs = u.adjoint() * c.cast<Complex>() * u;

  // T S + S T^H = rhs, T upper triangular: back substitution from the bottom right.
  const double floor = 1e-13 * (1.0 + b.norm());
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(q, q);
  for (Eigen::Index i = q - 1; i >= 0; --i) {
    for (Eigen::Index j = q - 1; j >= 0; --j) {
      Complex acc = rhs(i, j);
      for (Eigen::Index k = i + 1; k < q; ++k) acc -= t(i, k) * s(k, j);
      for (Eigen::Index l = j + 1; l < q; ++l) acc -= s(i, l) * std::conj(t(j, l));
      const Complex denom = t(i, i) + std::conj(t(j, j));
      if (std::abs(denom) <= floor) throw RetractionDomainError("points not in retraction domain");
      s(i, j) = acc / denom;
    }
  }
  return (u * s * u.adjoint()).real();
}

TangentVector inverse_retract(const StiefelPoint& x, const StiefelPoint& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionError("inverse_retract: shape mismatch");
  const Eigen::Index q = x.cols();
  const Eigen::MatrixXd b = x.matrix().transpose() * y.matrix();
  Eigen::MatrixXd s = solve_lyapunov(b, 2.0 * Eigen::MatrixXd::Identity(q, q));
  // The solution is symmetric; remove rounding asymmetry.
  s = 0.5 * (s + s.transpose()).eval();
  return TangentVector::unchecked(y.matrix() * s - x.matrix());
}

FeasiblePoint feasible_project(const StiefelPoint& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const Eigen::VectorXd w = x.matrix().transpose() * one;
  const double w_norm = w.norm();
  Eigen::VectorXd dir;
  if (w_norm > 1e-12) {
    dir = w / w_norm;
  } else {
    dir = Eigen::VectorXd::Unit(q, q - 1);
  }
  Eigen::MatrixXd y = x.matrix();
  y.noalias() -= (x.matrix() * dir) * dir.transpose();
  y.noalias() += one * dir.transpose();
  return FeasiblePoint(StiefelPoint(std::move(y)));
}

}  // namespace stiefelcd
