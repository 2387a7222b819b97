#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stiefelcd/graph.hpp"
#include "stiefelcd/manifold.hpp"
#include "stiefelcd/partition.hpp"

namespace stiefelcd {

struct SolverConfig {
  int q = 2;
  double lambda0 = 0.05;
  double lambda_growth = 1.5;
  /// Prox step is mu_scale / L with L estimated from the operator.
  double mu_scale = 1.0;
  double sigma = 1e-4;
  double beta = 0.5;
  int safeguard_period = 5;
  int max_outer_iter = 2000;
  /// Stationarity tolerance on the projected step ||x_{k+1} - y_k|| / mu;
  /// non-positive means 1e-6 sqrt(n q).
  double grad_tol = 0.0;
  int max_continuation_rounds = 40;
  int restarts = 1;
  std::uint64_t seed = 0;

  /// Throws InputError when a field is out of range.
  void validate() const;
  double resolved_grad_tol(int n) const;
};

struct SolverEvents {
  int safeguard_calls = 0;
  int safeguard_activations = 0;
  int safeguard_underflows = 0;
  int momentum_resets = 0;
  int prox_fixed_point_steps = 0;
  /// Prox solves retried without the warm multiplier.
  int prox_cold_restarts = 0;
  /// Prox solves that needed the looser fallback tolerance.
  int prox_relaxations = 0;

  SolverEvents& operator+=(const SolverEvents& o);
};

/// Iterates of the accelerated method. x and y are always feasible.
struct SolverState {
  FeasiblePoint x;
  FeasiblePoint y;
  FeasiblePoint z;
  double t = 1.0;
  int k = 0;
  /// F(x) in minimization form.
  double f_x = 0.0;
  std::optional<Eigen::MatrixXd> multiplier;

  explicit SolverState(const FeasiblePoint& start);
};

/// F(X) = -tr(X^T M X) + lambda ||X||_1, the minimization form used by the
/// iteration; traces report -F.
class PenalizedObjective {
 public:
  PenalizedObjective(const ModularityOperator& op, double lambda) : op_(&op), lambda_(lambda) {}

  double value(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  Eigen::MatrixXd euclidean_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  double lambda() const noexcept { return lambda_; }

 private:
  const ModularityOperator* op_;
  double lambda_;
};

/// 2 ||M||_2 by power iteration (at most 100 steps, relative change < 1e-6),
/// inflated by 1 %, floored at 1e-12.
double estimate_lipschitz(const ModularityOperator& op, std::uint64_t seed = 0);

/// Step mu = mu_scale / L, capped for near-zero L.
double prox_step(double lipschitz, double mu_scale);

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal, orthogonal to the all-ones vector
  int lanczos_steps = 0;
};

/// Algebraically largest k eigenpairs of M restricted to the complement of
/// the all-ones vector. Matrix-free Lanczos with full reorthogonalization.
EigenPairs top_eigenpairs(const ModularityOperator& op, int k, std::uint64_t seed = 0);

struct SpectralStart {
  FeasiblePoint x0;
  Eigen::VectorXd eigenvalues;
  /// False when fewer than q - 1 eigenvalues are positive.
  bool enough_positive = true;
};

/// X0 = [Y, 1/sqrt(n)] with Y the top q - 1 eigenvectors of M.
SpectralStart init_spectral(const ModularityOperator& op, int q, std::uint64_t seed = 0);

/// t' = (sqrt(4 t^2 + 1) + 1) / 2.
double momentum_next(double t);

struct ArppgResult {
  explicit ArppgResult(const FeasiblePoint& start) : x(start) {}

  FeasiblePoint x;
  /// -F(x_k) after each iteration.
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  /// Stopped because F at consecutive safeguard calls stopped decreasing.
  bool stalled = false;
  /// ||x_{k+1} - y_k||_F / mu at the last iteration.
  double stationarity = 0.0;
  SolverEvents events;
  std::optional<Eigen::MatrixXd> multiplier;
};

/// Accelerated Riemannian projected proximal gradient for fixed lambda,
/// starting from a feasible x0 with prox step `step`.
ArppgResult arppg(const ModularityOperator& op, const SolverConfig& config, const FeasiblePoint& x0, double lambda,
                  double step, std::optional<Eigen::MatrixXd> warm_multiplier = std::nullopt);

struct SafeguardOutcome {
  bool took_effect = false;
  bool underflow = false;
  double alpha = 1.0;
  double candidate_value = 0.0;
  SolverEvents events;
};

/// Monotone check run every N iterations: backtracking prox step from z;
/// replaces x, y (and resets t) when it beats F(x); then sets z = x.
SafeguardOutcome safeguard(SolverState& state, const ModularityOperator& op, const SolverConfig& config,
                           double lambda, double step);

struct DetectionResult {
  Partition partition;
  std::optional<FeasiblePoint> x_star;
  /// tr(X^T M X) - lambda ||X||_1 per iteration, concatenated over rounds.
  std::vector<double> objective_trace;
  std::vector<double> lambda_path;
  double modularity = 0.0;
  double penalized_objective = 0.0;
  double lipschitz = 0.0;
  double step = 0.0;
  int iterations = 0;
  int best_restart = 0;
  /// Continuation round whose rounding is returned (best modularity).
  int selected_round = 0;
  /// Mean over rows of max|x_ij| / ||x_i||_2.
  double row_dominance = 0.0;
  double wall_seconds = 0.0;
  bool spectral_warning = false;
  SolverEvents events;
};

/// Spectral start, ARPPG over an increasing lambda sequence, rounding. The
/// returned partition is the rounding with the highest modularity over the
/// rounds of the best restart.
DetectionResult continuation(const ModularityOperator& op, const SolverConfig& config);

/// Row-wise argmax of |x_ij| (ties to the lowest column), empty columns
/// dropped and the rest relabeled 0..k-1 in column order.
Partition round_to_assignment(const Eigen::Ref<const Eigen::MatrixXd>& x);

double row_dominance(const Eigen::Ref<const Eigen::MatrixXd>& x);

}  // namespace stiefelcd
