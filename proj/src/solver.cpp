#include "stiefelcd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "stiefelcd/error.hpp"
#include "stiefelcd/prox.hpp"
#include "stiefelcd/random.hpp"

namespace stiefelcd {

namespace {

constexpr double kLipschitzFloor = 1e-12;
constexpr double kMaxStep = 1e6;
constexpr double kAlphaFloor = 1e-16;
constexpr double kStallTolerance = 1e-12;
constexpr double kProxRelaxation = 1e3;

}  // namespace

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw InputError("invalid solver config: " + what); };
  if (q < 2) fail("q must be at least 2");
  if (!(lambda0 >= 0)) fail("lambda0 must be non-negative");
  if (!(lambda_growth > 1)) fail("lambda_growth must be greater than 1");
  if (!(mu_scale > 0 && mu_scale <= 1)) fail("mu_scale must lie in (0, 1]");
  if (!(sigma > 0 && sigma < 1)) fail("sigma must lie in (0, 1)");
  if (!(beta > 0 && beta < 1)) fail("beta must lie in (0, 1)");
  if (safeguard_period < 1) fail("safeguard period must be positive");
  if (max_outer_iter < 1) fail("max_outer_iter must be positive");
  if (max_continuation_rounds < 1) fail("max_continuation_rounds must be positive");
  if (restarts < 1) fail("restarts must be positive");
}

double SolverConfig::resolved_grad_tol(int n) const {
  return grad_tol > 0 ? grad_tol : 1e-6 * std::sqrt(static_cast<double>(n) * q);
}

SolverEvents& SolverEvents::operator+=(const SolverEvents& o) {
  safeguard_calls += o.safeguard_calls;
  safeguard_activations += o.safeguard_activations;
  safeguard_underflows += o.safeguard_underflows;
  momentum_resets += o.momentum_resets;
  prox_fixed_point_steps += o.prox_fixed_point_steps;
  prox_cold_restarts += o.prox_cold_restarts;
  prox_relaxations += o.prox_relaxations;
  return *this;
}

SolverState::SolverState(const FeasiblePoint& start) : x(start), y(start), z(start) {}

double PenalizedObjective::value(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return -op_->quadratic(x) + lambda_ * x.lpNorm<1>();
}

Eigen::MatrixXd PenalizedObjective::euclidean_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return -2.0 * op_->apply(x);
}

double estimate_lipschitz(const ModularityOperator& op, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Eigen::VectorXd v = rng.normal_matrix(op.n(), 1);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w = op.apply(v);
    const double norm = w.norm();
    if (norm == 0.0) {
      estimate = 0.0;
      break;
    }
    const double change = std::abs(norm - estimate);
    estimate = norm;
    v = w / norm;
    if (change <= 1e-6 * norm) break;
  }
  return std::max(2.0 * estimate * 1.01, kLipschitzFloor);
}

double prox_step(double lipschitz, double mu_scale) { return std::min(mu_scale / lipschitz, kMaxStep); }

EigenPairs top_eigenpairs(const ModularityOperator& op, int k, std::uint64_t seed) {
  const Eigen::Index n = op.n();
  const Eigen::Index dim = n - 1;  // complement of the all-ones direction
  if (k < 1 || k > dim) throw InputError("requested " + std::to_string(k) + " eigenpairs, at most " +
                                         std::to_string(dim) + " available");
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Rng rng(seed ^ 0xc2b2ae3d27d4eb4fULL);

  Eigen::MatrixXd basis(n, dim);
  std::vector<double> alpha;
  std::vector<double> beta;

  auto orthogonalize = [&](Eigen::VectorXd& w, Eigen::Index used) {
    for (int pass = 0; pass < 2; ++pass) {
      w -= one * one.dot(w);
      if (used > 0) w -= basis.leftCols(used) * (basis.leftCols(used).transpose() * w);
    }
  };
  auto fresh_direction = [&](Eigen::Index used) {
    for (;;) {
      Eigen::VectorXd w = rng.normal_matrix(n, 1);
      orthogonalize(w, used);
      const double norm = w.norm();
      if (norm > 1e-8) return Eigen::VectorXd(w / norm);
    }
  };

  const Eigen::Index min_steps = std::min<Eigen::Index>(dim, std::max<Eigen::Index>(2 * k + 20, 40));
  basis.col(0) = fresh_direction(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz;
  Eigen::Index steps = 0;
  double scale = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    Eigen::VectorXd w = op.apply(basis.col(j));
    const double a = basis.col(j).dot(w);
    alpha.push_back(a);
    orthogonalize(w, j + 1);
    double b = w.norm();
    scale = std::max({scale, std::abs(a), b});
    steps = j + 1;
    if (steps == dim) break;

    const bool breakdown = b <= 1e-12 * std::max(scale, 1.0);
    if (breakdown) {
      // Invariant subspace found; continue in a fresh direction so repeated
      // eigenvalues are not missed.
      beta.push_back(0.0);
      basis.col(j + 1) = fresh_direction(j + 1);
      continue;
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;

    if (steps >= min_steps && steps >= k && (steps % 5 == 0)) {
      const Eigen::Map<const Eigen::VectorXd> diag(alpha.data(), steps);
      const Eigen::Map<const Eigen::VectorXd> sub(beta.data(), steps - 1);
      ritz.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      bool converged = true;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double residual = std::abs(b * ritz.eigenvectors()(steps - 1, steps - 1 - i));
        if (residual > 1e-10 * std::max(scale, 1.0)) {
          converged = false;
          break;
        }
      }
      if (converged) break;
    }
  }

  const Eigen::Map<const Eigen::VectorXd> diag(alpha.data(), steps);
  const Eigen::Map<const Eigen::VectorXd> sub(beta.data(), steps - 1);
  ritz.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

  EigenPairs out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  out.lanczos_steps = static_cast<int>(steps);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index col = steps - 1 - i;
    out.values(i) = ritz.eigenvalues()(col);
    Eigen::VectorXd v = basis.leftCols(steps) * ritz.eigenvectors().col(col);
    v.normalize();
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0) v = -v;
    out.vectors.col(i) = v;
  }
  return out;
}

SpectralStart init_spectral(const ModularityOperator& op, int q, std::uint64_t seed) {
  if (q < 2 || q >= op.n()) {
    throw InputError("spectral start needs 2 <= q < n (q = " + std::to_string(q) + ", n = " + std::to_string(op.n()) +
                     ")");
  }
  const EigenPairs pairs = top_eigenpairs(op, q - 1, seed);
  Eigen::MatrixXd x0(op.n(), q);
  x0.leftCols(q - 1) = pairs.vectors;
  x0.col(q - 1).setConstant(1.0 / std::sqrt(static_cast<double>(op.n())));
  const bool enough = (pairs.values.array() > 0).count() == q - 1;
  return SpectralStart{FeasiblePoint(StiefelPoint(std::move(x0))), pairs.values, enough};
}

double momentum_next(double t) { return (std::sqrt(4.0 * t * t + 1.0) + 1.0) / 2.0; }

namespace {

// On ideal-like inputs whole blocks of rows cross the threshold together
// and Newton can stall just above the default tolerance; retry once with a
// looser one before giving up.
ProxSolution prox_at(const FeasiblePoint& base, const PenalizedObjective& objective, double step,
                     const std::optional<Eigen::MatrixXd>& warm, SolverEvents& events) {
  ProxProblem problem{base.point(), objective.euclidean_gradient(base.matrix()), step, objective.lambda()};
  if (warm) {
    try {
      return solve_tangent_prox(problem, warm);
    } catch (const ProxError&) {
      // A stale multiplier can leave Newton on a flat piece of the dual.
      ++events.prox_cold_restarts;
    }
  }
  try {
    return solve_tangent_prox(problem);
  } catch (const ProxError&) {
    const Eigen::MatrixXd grad = tangent_project(problem.base, problem.gradient).matrix();
    problem.tol = kProxRelaxation * 1e-8 * (1.0 + grad.norm());
    ++events.prox_relaxations;
    return solve_tangent_prox(problem);
  }
}

FeasiblePoint step_from(const FeasiblePoint& base, const Eigen::MatrixXd& direction) {
  return feasible_project(retract(base.point(), direction));
}

}  // namespace

SafeguardOutcome safeguard(SolverState& state, const ModularityOperator& op, const SolverConfig& config,
                           double lambda, double step) {
  SafeguardOutcome out;
  const PenalizedObjective objective(op, lambda);
  const ProxSolution sol = prox_at(state.z, objective, step, state.multiplier, out.events);
  state.multiplier = sol.multiplier;
  const Eigen::MatrixXd& eta = sol.direction.matrix();
  const double eta_sq = eta.squaredNorm();
  const double f_z = objective.value(state.z.matrix());

  std::optional<FeasiblePoint> candidate;
  double alpha = 1.0;
  for (;;) {
    FeasiblePoint trial = step_from(state.z, alpha * eta);
    const double f_trial = objective.value(trial.matrix());
    if (f_trial <= f_z - config.sigma * alpha * eta_sq) {
      candidate = std::move(trial);
      out.candidate_value = f_trial;
      break;
    }
    alpha *= config.beta;
    if (alpha < kAlphaFloor) {
      out.underflow = true;
      candidate = state.z;
      out.candidate_value = f_z;
      break;
    }
  }
  out.alpha = alpha;

  if (out.candidate_value < state.f_x) {
    state.x = *candidate;
    state.y = *candidate;
    state.t = 1.0;
    state.f_x = out.candidate_value;
    out.took_effect = true;
  }
  state.z = state.x;
  return out;
}

ArppgResult arppg(const ModularityOperator& op, const SolverConfig& config, const FeasiblePoint& x0, double lambda,
                  double step, std::optional<Eigen::MatrixXd> warm_multiplier) {
  if (x0.point().rows() != op.n()) throw DimensionError("start point row count differs from graph size");
  const PenalizedObjective objective(op, lambda);
  const double grad_tol = config.resolved_grad_tol(op.n());

  SolverState state(x0);
  state.f_x = objective.value(state.x.matrix());
  state.multiplier = std::move(warm_multiplier);

  ArppgResult result{state.x};
  result.stationarity = std::numeric_limits<double>::infinity();
  std::optional<double> sampled;
  for (state.k = 0; state.k < config.max_outer_iter; ++state.k) {
    if (state.k % config.safeguard_period == 0) {
      const SafeguardOutcome sg = safeguard(state, op, config, lambda, step);
      ++result.events.safeguard_calls;
      if (sg.took_effect) ++result.events.safeguard_activations;
      if (sg.underflow) ++result.events.safeguard_underflows;
      result.events += sg.events;
      // The sampled objective is non-increasing; once it stops moving the
      // iteration is cycling and further steps are wasted.
      if (sampled && *sampled - state.f_x <= kStallTolerance * (1.0 + std::abs(state.f_x))) {
        result.stalled = true;
        break;
      }
      sampled = state.f_x;
    }

    std::optional<ProxSolution> solved;
    try {
      solved = prox_at(state.y, objective, step, state.multiplier, result.events);
    } catch (const ProxError& e) {
      throw ProxError("iteration " + std::to_string(state.k) + ": " + e.what(), e.best_residual());
    }
    const ProxSolution& sol = *solved;
    state.multiplier = sol.multiplier;
    result.events.prox_fixed_point_steps += sol.fixed_point_steps;

    FeasiblePoint next = step_from(state.y, sol.direction.matrix());
    const double f_next = objective.value(next.matrix());
    // The prox direction ignores the all-ones constraint, so ||eta|| stays
    // bounded away from zero at feasible fixed points; measure the projected
    // step instead.
    result.stationarity = (next.matrix() - state.y.matrix()).norm() / step;
    if (result.stationarity <= grad_tol) {
      state.x = std::move(next);
      state.f_x = f_next;
      result.trace.push_back(-f_next);
      result.converged = true;
      ++state.k;
      break;
    }

    const double t_next = momentum_next(state.t);
    std::optional<FeasiblePoint> y_next;
    try {
      const TangentVector back = inverse_retract(next.point(), state.x.point());
      y_next = step_from(next, ((1.0 - state.t) / t_next) * back.matrix());
      state.t = t_next;
    } catch (const RetractionDomainError&) {
      y_next = next;
      state.t = 1.0;
      ++result.events.momentum_resets;
    }
    state.x = std::move(next);
    state.y = std::move(*y_next);
    state.f_x = f_next;
    result.trace.push_back(-f_next);
  }
  result.iterations = state.k;
  result.x = state.x;
  result.multiplier = state.multiplier;
  return result;
}

Partition round_to_assignment(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  std::vector<int> raw(static_cast<std::size_t>(x.rows()));
  std::vector<int> used(static_cast<std::size_t>(x.cols()), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    double best_mag = std::abs(x(i, 0));
    for (Eigen::Index j = 1; j < x.cols(); ++j) {
      if (std::abs(x(i, j)) > best_mag) {
        best_mag = std::abs(x(i, j));
        best = j;
      }
    }
    raw[static_cast<std::size_t>(i)] = static_cast<int>(best);
    used[static_cast<std::size_t>(best)] = 1;
  }
  std::vector<int> relabel(used.size(), -1);
  int next = 0;
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (used[j]) relabel[j] = next++;
  }
  for (int& l : raw) l = relabel[static_cast<std::size_t>(l)];
  return Partition(std::move(raw));
}

double row_dominance(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    total += norm > 0 ? x.row(i).cwiseAbs().maxCoeff() / norm : 0.0;
  }
  return total / static_cast<double>(x.rows());
}

namespace {

struct RunOutcome {
  explicit RunOutcome(const FeasiblePoint& start) : x(start), selected(start) {}

  FeasiblePoint x;
  // Round whose rounding has the highest modularity, with its iterate.
  FeasiblePoint selected;
  Partition partition;
  double modularity = -std::numeric_limits<double>::infinity();
  double penalized = 0.0;
  int selected_round = 0;
  std::vector<double> trace;
  std::vector<double> lambdas;
  int iterations = 0;
  SolverEvents events;
};

// Random rotation of the spectral block keeps the start feasible.
FeasiblePoint rotated_start(const FeasiblePoint& x0, std::uint64_t seed) {
  const Eigen::Index k = x0.matrix().cols() - 1;
  Rng rng(seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.normal_matrix(k, k));
  const Eigen::MatrixXd rotation = qr.householderQ();
  Eigen::MatrixXd x = x0.matrix();
  x.leftCols(k) = x0.matrix().leftCols(k) * rotation;
  return FeasiblePoint(StiefelPoint(std::move(x)));
}

RunOutcome run_continuation(const ModularityOperator& op, const SolverConfig& config, const FeasiblePoint& start,
                            double step) {
  RunOutcome run(start);
  double lambda = config.lambda0;
  std::optional<Eigen::MatrixXd> multiplier;
  for (int round = 0; round < config.max_continuation_rounds; ++round) {
    const PenalizedObjective objective(op, lambda);
    // Penalized objective of the warm start under this round's lambda.
    const double before = -objective.value(run.x.matrix());
    ArppgResult res = arppg(op, config, run.x, lambda, step, multiplier);
    const double after = -objective.value(res.x.matrix());

    run.lambdas.push_back(lambda);
    run.trace.insert(run.trace.end(), res.trace.begin(), res.trace.end());
    run.iterations += res.iterations;
    run.events += res.events;
    multiplier = res.multiplier;
    run.x = std::move(res.x);

    // Large lambda can drive X toward a degenerate sparse point; keep the
    // best rounding seen along the path. Ties go to the later, sparser round.
    Partition rounded = round_to_assignment(run.x.matrix());
    const double q = op.two_m() > 0 ? op.quadratic(rounded.assignment_matrix()) / op.two_m() : 0.0;
    if (q >= run.modularity - 1e-12) {
      run.selected = run.x;
      run.partition = std::move(rounded);
      run.modularity = q;
      run.penalized = after;
      run.selected_round = round;
    }

    if (round > 0 && after - before < 1e-6 * (1.0 + std::abs(before))) break;
    lambda *= config.lambda_growth;
  }
  return run;
}

}  // namespace

DetectionResult continuation(const ModularityOperator& op, const SolverConfig& config) {
  config.validate();
  if (config.q >= op.n()) throw InputError("q must be smaller than the number of nodes");
  const auto started = std::chrono::steady_clock::now();

  DetectionResult result;
  result.lipschitz = estimate_lipschitz(op, config.seed);
  result.step = prox_step(result.lipschitz, config.mu_scale);
  const SpectralStart spectral = init_spectral(op, config.q, config.seed);
  result.spectral_warning = !spectral.enough_positive;

  std::optional<RunOutcome> best;
  for (int r = 0; r < config.restarts; ++r) {
    const FeasiblePoint start =
        r == 0 ? spectral.x0 : rotated_start(spectral.x0, config.seed + 0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(r));
    RunOutcome run = run_continuation(op, config, start, result.step);
    result.events += run.events;
    if (!best || run.modularity > best->modularity) {
      best = std::move(run);
      result.best_restart = r;
    }
  }

  result.x_star = best->selected;
  result.selected_round = best->selected_round;
  result.objective_trace = std::move(best->trace);
  result.lambda_path = std::move(best->lambdas);
  result.iterations = best->iterations;
  result.penalized_objective = best->penalized;
  result.partition = std::move(best->partition);
  result.row_dominance = row_dominance(best->selected.matrix());
  result.modularity = best->modularity;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace stiefelcd
