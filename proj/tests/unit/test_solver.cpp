#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "stiefelcd/bench.hpp"
#include "stiefelcd/error.hpp"
#include "stiefelcd/metrics.hpp"
#include "stiefelcd/solver.hpp"

using namespace stiefelcd;

namespace {

Graph karate() {
  std::ifstream in(STIEFELCD_DATA_DIR "/karate.edges");
  REQUIRE(in);
  return parse_edge_list(in).graph;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  return oracle::eigenvalues_desc(m).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda_growth = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.sigma = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.beta = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.safeguard_period = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.q = 1;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK(SolverConfig{}.resolved_grad_tol(100) == doctest::Approx(1e-6 * std::sqrt(200.0)));
}

TEST_CASE("lipschitz estimate against the dense spectral norm") {
  for (const Graph& g : {ideal_graph({2, 2}).graph, karate()}) {
    const ModularityOperator op(g);
    const double norm = spectral_norm(oracle::dense_modularity(g));
    const double l = estimate_lipschitz(op);
    CHECK(l / 2.0 == doctest::Approx(norm).epsilon(0.02));
    CHECK(prox_step(l, 1.0) * l <= 1.0 + 1e-15);
  }
  const ModularityOperator empty(Graph(3, {}));
  CHECK(estimate_lipschitz(empty) == 1e-12);
  CHECK(prox_step(1e-12, 1.0) <= 1e6);
}

TEST_CASE("top eigenpairs against the dense eigensolver") {
  const Graph g = karate();
  const ModularityOperator op(g);
  const Eigen::VectorXd dense = oracle::eigenvalues_desc(oracle::dense_modularity(g));
  const EigenPairs pairs = top_eigenpairs(op, 4, 7);
  for (int i = 0; i < 4; ++i) {
    CHECK(pairs.values(i) == doctest::Approx(dense(i)).epsilon(1e-10));
    CHECK((op.apply(pairs.vectors.col(i)) - pairs.values(i) * pairs.vectors.col(i)).norm() <= 1e-8);
  }
  CHECK((pairs.vectors.transpose() * pairs.vectors - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-10);
  CHECK(pairs.vectors.colwise().sum().norm() <= 1e-10);
}

TEST_CASE("repeated eigenvalues on ideal graphs are all found") {
  // Equal cliques make the nonzero spectrum of M degenerate.
  const GeneratedGraph ideal = ideal_graph({4, 4, 4, 4});
  const ModularityOperator op(ideal.graph);
  const Eigen::VectorXd dense = oracle::eigenvalues_desc(oracle::dense_modularity(ideal.graph));
  const EigenPairs pairs = top_eigenpairs(op, 3);
  for (int i = 0; i < 3; ++i) CHECK(pairs.values(i) == doctest::Approx(dense(i)).epsilon(1e-10));
}

TEST_CASE("spectral start") {
  const Graph g = karate();
  const ModularityOperator op(g);
  const SpectralStart s = init_spectral(op, 2);
  CHECK(s.x0.certificate() <= 1e-10);
  CHECK(orthonormality_error(s.x0.matrix()) <= 1e-12);
  CHECK(s.enough_positive);

  const std::vector<int> sizes = {5, 6, 7};
  const GeneratedGraph ideal = ideal_graph(sizes);
  const Eigen::MatrixXd a = ideal_adjacency(ideal.truth);
  // On the Z Z^T variant the q - 1 nonzero eigenvalues sum to tr(M), which
  // is f at the column-normalized assignment: n - sum n_i^3 / sum n_i^2.
  const Eigen::VectorXd ev = oracle::eigenvalues_desc(oracle::dense_modularity(a));
  const Eigen::MatrixXd zn = ideal.truth.assignment_matrix(true);
  const double normalized_f = (zn.transpose() * oracle::dense_modularity(a) * zn).trace();
  CHECK(ev.head(2).sum() == doctest::Approx(18.0 - (125.0 + 216.0 + 343.0) / 110.0).epsilon(1e-12));
  CHECK(ev.head(2).sum() == doctest::Approx(normalized_f).epsilon(1e-12));
  const ModularityOperator iop(ideal.graph);
  const SpectralStart is = init_spectral(iop, 3);
  const Eigen::VectorXd iev = oracle::eigenvalues_desc(oracle::dense_modularity(ideal.graph));
  CHECK(iop.quadratic(is.x0.matrix()) == doctest::Approx(iev.head(2).sum()).epsilon(1e-10));

  CHECK_THROWS_AS(init_spectral(op, 34), InputError);
  CHECK_THROWS_AS(init_spectral(op, 1), InputError);
}

TEST_CASE("momentum recurrence") {
  CHECK(momentum_next(1.0) == doctest::Approx(1.6180339887).epsilon(1e-10));
  CHECK(momentum_next(1.618034) == doctest::Approx((std::sqrt(4 * 1.618034 * 1.618034 + 1) + 1) / 2).epsilon(1e-15));
  CHECK(momentum_next(1.618034) == doctest::Approx(2.19353).epsilon(1e-5));
  double t = 1.0;
  for (int k = 0; k < 1000; ++k) {
    const double next = momentum_next(t);
    CHECK(std::abs(next * next - next - t * t) <= 1e-12 * std::max(1.0, t * t));
    CHECK(next > t);
    t = next;
  }
}

TEST_CASE("lambda = 0 keeps the spectral optimum on ideal graphs") {
  const GeneratedGraph ideal = ideal_graph({3, 3, 3});
  const ModularityOperator op(ideal.graph);
  SolverConfig c;
  c.q = 3;
  const SpectralStart s = init_spectral(op, 3);
  const ArppgResult r = arppg(op, c, s.x0, 0.0, prox_step(estimate_lipschitz(op), 1.0));
  const Eigen::VectorXd ev = oracle::eigenvalues_desc(oracle::dense_modularity(ideal.graph));
  CHECK(std::abs(op.quadratic(r.x.matrix()) - ev.head(2).sum()) <= 1e-6);
  CHECK(r.iterations <= 1);
  CHECK(r.converged);
}

TEST_CASE("iterates stay feasible and safeguard samples do not increase") {
  const Graph g = karate();
  const ModularityOperator op(g);
  SolverConfig c;
  c.q = 3;
  c.safeguard_period = 1;  // sample every iteration's safeguard value
  const double step = prox_step(estimate_lipschitz(op), 1.0);
  const SpectralStart s = init_spectral(op, 3);
  SolverState state(s.x0);
  const PenalizedObjective obj(op, 0.1);
  state.f_x = obj.value(state.x.matrix());
  double previous = state.f_x;
  for (int k = 0; k < 30; ++k) {
    safeguard(state, op, c, 0.1, step);
    CHECK(state.f_x <= previous + 1e-12);
    CHECK(state.x.certificate() <= 1e-8);
    CHECK(orthonormality_error(state.x.matrix()) <= 1e-10);
    previous = state.f_x;
  }
}

TEST_CASE("safeguard replaces an overshooting iterate") {
  const Graph g = karate();
  const ModularityOperator op(g);
  SolverConfig c;
  c.q = 2;
  const double step = prox_step(estimate_lipschitz(op), 1.0);
  const SpectralStart s = init_spectral(op, 2);
  Rng rng(21);
  // x is a random feasible point, far worse than the spectral z.
  SolverState state(s.x0);
  state.x = FeasiblePoint(StiefelPoint(oracle::random_feasible(rng, 34, 2)));
  state.y = state.x;
  state.t = 3.0;
  const PenalizedObjective obj(op, 0.05);
  state.f_x = obj.value(state.x.matrix());
  const SafeguardOutcome out = safeguard(state, op, c, 0.05, step);
  CHECK(out.took_effect);
  CHECK(state.t == 1.0);
  CHECK(state.f_x < obj.value(s.x0.matrix()));
  CHECK((state.z.matrix() - state.x.matrix()).norm() == 0.0);
  CHECK((state.y.matrix() - state.x.matrix()).norm() == 0.0);
}

TEST_CASE("safeguard leaves a better iterate alone") {
  const Graph g = karate();
  const ModularityOperator op(g);
  SolverConfig c;
  c.q = 2;
  const double step = prox_step(estimate_lipschitz(op), 1.0);
  Rng rng(22);
  SolverState state(FeasiblePoint(StiefelPoint(oracle::random_feasible(rng, 34, 2))));
  state.x = init_spectral(op, 2).x0;
  state.t = 2.0;
  // Pretend the current iterate is extremely good.
  state.f_x = -1e9;
  const Eigen::MatrixXd before = state.x.matrix();
  const SafeguardOutcome out = safeguard(state, op, c, 0.05, step);
  CHECK_FALSE(out.took_effect);
  CHECK(state.t == 2.0);
  CHECK((state.x.matrix() - before).norm() == 0.0);
  CHECK((state.z.matrix() - before).norm() == 0.0);
}

TEST_CASE("backtracking arithmetic") {
  // With beta = 0.5 the accepted alpha is a power of one half.
  const Graph g = karate();
  const ModularityOperator op(g);
  SolverConfig c;
  c.q = 2;
  c.beta = 0.5;
  Rng rng(23);
  SolverState state(FeasiblePoint(StiefelPoint(oracle::random_feasible(rng, 34, 2))));
  state.f_x = PenalizedObjective(op, 0.05).value(state.x.matrix());
  // An oversized step forces rejections.
  const SafeguardOutcome out = safeguard(state, op, c, 0.05, 50.0);
  const double exponent = std::log2(out.alpha);
  CHECK(exponent == doctest::Approx(std::round(exponent)));
  CHECK(out.alpha < 1.0);
}

TEST_CASE("rounding") {
  Eigen::MatrixXd x(3, 2);
  x << 0.9, -0.1, -0.7, 0.7, 0.1, -0.8;
  CHECK(round_to_assignment(x).labels() == std::vector<int>{0, 0, 1});
  Eigen::MatrixXd empty_col(2, 3);
  empty_col << 0.0, 0.1, 0.9, 0.0, 0.2, 0.8;
  CHECK(round_to_assignment(empty_col).labels() == std::vector<int>{0, 0});

  const GeneratedGraph ideal = ideal_graph({3, 4, 5});
  CHECK(round_to_assignment(ideal.truth.assignment_matrix(true)) == ideal.truth);
  CHECK(row_dominance(ideal.truth.assignment_matrix(true)) == 1.0);
}

TEST_CASE("rounded modularity ignores column permutations") {
  const Graph g = karate();
  Rng rng(24);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd x = oracle::random_stiefel(rng, 34, 4);
    std::vector<int> perm = {0, 1, 2, 3};
    rng.shuffle(perm);
    Eigen::MatrixXd xp(34, 4);
    for (int j = 0; j < 4; ++j) xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
    CHECK(modularity_score(g, round_to_assignment(xp)) ==
          doctest::Approx(modularity_score(g, round_to_assignment(x))).epsilon(1e-12));
  }
}

TEST_CASE("continuation recovers an ideal graph") {
  const GeneratedGraph ideal = ideal_graph({5, 6, 7});
  const ModularityOperator op(ideal.graph);
  SolverConfig c;
  c.q = 3;
  const DetectionResult r = continuation(op, c);
  CHECK(nmi(r.partition, ideal.truth) == 1.0);
  CHECK(r.partition.community_count() <= 3);
  CHECK(r.lambda_path.front() == c.lambda0);
  for (std::size_t i = 1; i < r.lambda_path.size(); ++i) {
    CHECK(r.lambda_path[i] == doctest::Approx(r.lambda_path[i - 1] * c.lambda_growth));
  }
}

// Heavy mixing: late rounds push X toward a near-singleton labeling, and warm
// multipliers there used to stall the prox.
TEST_CASE("continuation on a weakly structured graph keeps the best rounding") {
  const PlantedGraph g = planted_partition(PlantedSpec{{250, 250, 250, 250}, 20.0, 0.5, 1});
  const ModularityOperator op(g.graph);
  SolverConfig c;
  c.q = 4;
  DetectionResult r;
  REQUIRE_NOTHROW(r = continuation(op, c));
  const Eigen::MatrixXd z = r.partition.assignment_matrix();
  const double dense_q = (z.transpose() * oracle::dense_modularity(g.graph) * z).trace() / (2.0 * g.graph.m());
  CHECK(r.modularity == doctest::Approx(dense_q).epsilon(1e-12));
  CHECK(r.modularity > modularity_score(g.graph, g.truth) - 0.02);
  CHECK(r.selected_round < static_cast<int>(r.lambda_path.size()));
  const Partition last = round_to_assignment(r.x_star->matrix());
  CHECK(last == r.partition);
}

TEST_CASE("continuation is deterministic") {
  const Graph g = karate();
  const ModularityOperator op(g);
  SolverConfig c;
  c.q = 3;
  c.restarts = 3;
  const DetectionResult a = continuation(op, c);
  const DetectionResult b = continuation(op, c);
  CHECK(a.partition == b.partition);
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.best_restart == b.best_restart);
}

TEST_CASE("continuation input checks") {
  const ModularityOperator op(ideal_graph({2, 2}).graph);
  SolverConfig c;
  c.q = 4;
  CHECK_THROWS_AS(continuation(op, c), InputError);
  c.q = 2;
  c.lambda_growth = 1.0;
  CHECK_THROWS_AS(continuation(op, c), InputError);
}
