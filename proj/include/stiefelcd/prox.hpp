#pragma once

#include <optional>

#include <Eigen/Core>

#include "stiefelcd/manifold.hpp"

namespace stiefelcd {

/// min_eta <grad, eta> + 1/(2 step) ||eta||_F^2 + l1_weight ||Y + eta||_1
/// subject to Y^T eta + eta^T Y = 0, with grad the tangent projection of
/// the Euclidean gradient at Y.
struct ProxProblem {
  StiefelPoint base;
  Eigen::MatrixXd gradient;  // Euclidean gradient of the smooth part at base
  double step = 1.0;
  double l1_weight = 0.0;
  /// KKT residual tolerance; non-positive means 1e-8 * (1 + ||grad||_F).
  double tol = 0.0;
  int max_iter = 100;
};

struct ProxSolution {
  TangentVector direction;
  /// Symmetric q x q multiplier of the tangency constraint; reuse as warm start.
  Eigen::MatrixXd multiplier;
  double residual = 0.0;
  double tol = 0.0;
  int iterations = 0;
  int fixed_point_steps = 0;
};

/// Entrywise sign(v) max(|v| - tau, 0).
Eigen::MatrixXd soft_threshold(const Eigen::Ref<const Eigen::MatrixXd>& v, double tau);

/// Semismooth Newton on the multiplier of the tangency constraint. Throws
/// ProxError (carrying the best residual) if max_iter is exhausted.
ProxSolution solve_tangent_prox(const ProxProblem& problem,
                                const std::optional<Eigen::MatrixXd>& warm_multiplier = std::nullopt);

/// <grad, eta> + 1/(2 step) ||eta||^2 + l1_weight ||Y + eta||_1.
double prox_objective(const ProxProblem& problem, const Eigen::Ref<const Eigen::MatrixXd>& eta);

}  // namespace stiefelcd
