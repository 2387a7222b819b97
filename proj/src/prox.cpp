#include "stiefelcd/prox.hpp"

#include <sstream>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stiefelcd/error.hpp"

namespace stiefelcd {

Eigen::MatrixXd soft_threshold(const Eigen::Ref<const Eigen::MatrixXd>& v, double tau) {
  return v.unaryExpr([tau](double x) {
    const double mag = std::abs(x) - tau;
    return mag > 0 ? std::copysign(mag, x) : 0.0;
  });
}

double prox_objective(const ProxProblem& problem, const Eigen::Ref<const Eigen::MatrixXd>& eta) {
  const Eigen::MatrixXd grad = tangent_project(problem.base, problem.gradient).matrix();
  return (grad.array() * eta.array()).sum() + eta.squaredNorm() / (2.0 * problem.step) +
         problem.l1_weight * (problem.base.matrix() + eta).lpNorm<1>();
}

namespace {

// Symmetric q x q matrices are handled through their upper triangle, packed
// row by row.
struct SymmetricPacking {
  explicit SymmetricPacking(Eigen::Index q) : q(q) {
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = i; j < q; ++j) pairs.emplace_back(i, j);
  }

  Eigen::VectorXd pack(const Eigen::MatrixXd& s) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k) out(static_cast<Eigen::Index>(k)) = s(pairs[k].first, pairs[k].second);
    return out;
  }

  Eigen::MatrixXd unpack(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd s(q, q);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      s(i, j) = s(j, i) = v(static_cast<Eigen::Index>(k));
    }
    return s;
  }

  Eigen::Index q;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
};

class MultiplierSystem {
 public:
  MultiplierSystem(const ProxProblem& p, const Eigen::MatrixXd& grad)
      : y_(p.base.matrix()),
        grad_(grad),
        step_(p.step),
        weight_(p.l1_weight),
        tau_(p.step * p.l1_weight),
        shift_(y_ - p.step * grad) {}

  // Unconstrained minimizer of the Lagrangian for a fixed multiplier.
  Eigen::MatrixXd direction(const Eigen::MatrixXd& lambda) const {
    pre_ = shift_ - step_ * (y_ * lambda);
    return soft_threshold(pre_, tau_) - y_;
  }

  Eigen::MatrixXd constraint(const Eigen::MatrixXd& eta) const {
    const Eigen::MatrixXd yte = y_.transpose() * eta;
    return yte + yte.transpose();
  }

  // Generalized Jacobian of lambda -> constraint(direction(lambda)) in packed
  // coordinates, at the argument of the last direction() call.
  Eigen::MatrixXd jacobian(const SymmetricPacking& packing) const {
    const Eigen::Index q = y_.cols();
    const Eigen::MatrixXd mask = (pre_.array().abs() >= tau_).cast<double>().matrix();
    std::vector<Eigen::MatrixXd> gram(static_cast<std::size_t>(q));
    for (Eigen::Index c = 0; c < q; ++c) {
      gram[static_cast<std::size_t>(c)] = y_.transpose() * mask.col(c).asDiagonal() * y_;
    }
    const auto p = static_cast<Eigen::Index>(packing.pairs.size());
    Eigen::MatrixXd jac(p, p);
    Eigen::MatrixXd w(q, q);
    for (Eigen::Index k = 0; k < p; ++k) {
      const auto [a, b] = packing.pairs[static_cast<std::size_t>(k)];
      // w = Y^T (mask .* (Y H)) for H = E_ab + E_ba (or E_aa).
      w.setZero();
      w.col(b) += gram[static_cast<std::size_t>(b)].col(a);
      if (a != b) w.col(a) += gram[static_cast<std::size_t>(a)].col(b);
      jac.col(k) = packing.pack(-step_ * (w + w.transpose()));
    }
    return jac;
  }

  // Lagrangian at (eta, lambda) with eta = direction(lambda): the concave dual
  // function whose gradient is constraint(eta) / 2.
  double dual(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& eta, const Eigen::MatrixXd& residual) const {
    return (grad_.array() * eta.array()).sum() + eta.squaredNorm() / (2.0 * step_) +
           weight_ * (y_ + eta).lpNorm<1>() + 0.5 * (lambda.array() * residual.array()).sum();
  }

  double step() const { return step_; }

 private:
  const Eigen::MatrixXd& y_;
  const Eigen::MatrixXd& grad_;
  double step_;
  double weight_;
  double tau_;
  Eigen::MatrixXd shift_;
  mutable Eigen::MatrixXd pre_;
};

}  // namespace

ProxSolution solve_tangent_prox(const ProxProblem& problem, const std::optional<Eigen::MatrixXd>& warm_multiplier) {
  if (!(problem.step > 0)) throw InputError("prox step must be positive");
  if (!(problem.l1_weight >= 0)) throw InputError("l1 weight must be non-negative");
  if (problem.gradient.rows() != problem.base.rows() || problem.gradient.cols() != problem.base.cols()) {
    throw DimensionError("prox gradient shape differs from base point");
  }
  const Eigen::Index q = problem.base.cols();
  const Eigen::MatrixXd grad = tangent_project(problem.base, problem.gradient).matrix();
  const double tol = problem.tol > 0 ? problem.tol : 1e-8 * (1.0 + grad.norm());

  const SymmetricPacking packing(q);
  const MultiplierSystem system(problem, grad);

  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(q, q);
  if (warm_multiplier && warm_multiplier->rows() == q && warm_multiplier->cols() == q) {
    lambda = 0.5 * (*warm_multiplier + warm_multiplier->transpose());
  }

  Eigen::MatrixXd eta = system.direction(lambda);
  Eigen::MatrixXd residual = system.constraint(eta);
  double res_norm = residual.norm();
  double dual = system.dual(lambda, eta, residual);
  double best = res_norm;
  int fixed_point_steps = 0;

  for (int it = 0; it <= problem.max_iter; ++it) {
    if (res_norm <= tol) {
      return ProxSolution{TangentVector::unchecked(std::move(eta)), std::move(lambda), res_norm, tol, it,
                          fixed_point_steps};
    }
    if (it == problem.max_iter) break;

    const Eigen::MatrixXd jac = system.jacobian(packing);
    const Eigen::VectorXd rhs = -packing.pack(residual);
    Eigen::VectorXd newton;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    qr.setThreshold(1e-12);
    if (qr.rank() == jac.cols()) {
      newton = qr.solve(rhs);
    } else {
      newton = jac.completeOrthogonalDecomposition().solve(rhs);
    }

    bool accepted = false;
    const Eigen::MatrixXd delta = newton.allFinite() ? packing.unpack(newton) : Eigen::MatrixXd::Zero(q, q);
    // Ascent slope of the dual along delta; non-negative for the Newton step,
    // but useless when delta is nearly orthogonal to the dual gradient.
    const double slope = 0.5 * (residual.array() * delta.array()).sum();
    if (slope > 1e-8 * 0.5 * res_norm * delta.norm()) {
      double alpha = 1.0;
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        Eigen::MatrixXd trial = lambda + alpha * delta;
        Eigen::MatrixXd trial_eta = system.direction(trial);
        Eigen::MatrixXd trial_res = system.constraint(trial_eta);
        const double trial_dual = system.dual(trial, trial_eta, trial_res);
        if (trial_dual >= dual + 1e-4 * alpha * slope) {
          lambda = std::move(trial);
          eta = std::move(trial_eta);
          residual = std::move(trial_res);
          res_norm = residual.norm();
          dual = trial_dual;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // Dual ascent: the dual gradient is residual / 2 with Lipschitz constant <= step,
      // so 1 / step is always safe. On flat (linear) pieces of the dual keep
      // doubling while it still increases.
      const Eigen::MatrixXd ascent = residual / (2.0 * system.step());
      Eigen::MatrixXd next = lambda + ascent;
      Eigen::MatrixXd next_eta = system.direction(next);
      Eigen::MatrixXd next_res = system.constraint(next_eta);
      double next_dual = system.dual(next, next_eta, next_res);
      for (double scale = 2.0; scale < 1e12; scale *= 2.0) {
        Eigen::MatrixXd trial = lambda + scale * ascent;
        Eigen::MatrixXd trial_eta = system.direction(trial);
        Eigen::MatrixXd trial_res = system.constraint(trial_eta);
        const double trial_dual = system.dual(trial, trial_eta, trial_res);
        if (!(trial_dual > next_dual)) break;
        next = std::move(trial);
        next_eta = std::move(trial_eta);
        next_res = std::move(trial_res);
        next_dual = trial_dual;
      }
      lambda = std::move(next);
      eta = std::move(next_eta);
      residual = std::move(next_res);
      res_norm = residual.norm();
      dual = next_dual;
      ++fixed_point_steps;
    }
    best = std::min(best, res_norm);
  }
  std::ostringstream msg;
  msg << "tangent prox did not reach tolerance " << tol << " in " << problem.max_iter << " iterations (best residual "
      << best << ")";
  throw ProxError(msg.str(), best);
}

}  // namespace stiefelcd
