#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "oracles.hpp"
#include "stiefelcd/bench.hpp"
#include "stiefelcd/error.hpp"
#include "stiefelcd/metrics.hpp"

using namespace stiefelcd;

TEST_CASE("ideal graph construction") {
  const GeneratedGraph two = ideal_graph({2, 2});
  CHECK(two.graph.n() == 4);
  CHECK(two.graph.m() == 2);
  CHECK(modularity_score(two.graph, two.truth) == doctest::Approx(0.5));
  const GeneratedGraph three = ideal_graph({3, 3, 3});
  CHECK(three.graph.n() == 9);
  CHECK(three.graph.m() == 9);
  CHECK(ideal_graph({5, 6, 7}).graph.m() == 46);
  CHECK_THROWS_AS(ideal_graph({1, 3}), InputError);
}

TEST_CASE("shuffled ideal graphs are isomorphic") {
  const GeneratedGraph plain = ideal_graph({3, 4, 5});
  const GeneratedGraph shuffled = ideal_graph({3, 4, 5}, 17);
  std::vector<int> a = plain.graph.degrees();
  std::vector<int> b = shuffled.graph.degrees();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  CHECK(modularity_score(shuffled.graph, shuffled.truth) ==
        doctest::Approx(modularity_score(plain.graph, plain.truth)).epsilon(1e-15));
  for (const auto& [i, j] : shuffled.graph.edges()) CHECK(shuffled.truth[static_cast<std::size_t>(i)] == shuffled.truth[static_cast<std::size_t>(j)]);
}

TEST_CASE("planted partition calibration") {
  PlantedSpec spec{{50, 50, 50, 50}, 20.0, 0.0, 1};
  const PlantedGraph none = planted_partition(spec);
  for (const auto& [i, j] : none.graph.edges()) CHECK(none.truth[static_cast<std::size_t>(i)] == none.truth[static_cast<std::size_t>(j)]);

  spec.mixing = 0.1;
  double mixing = 0.0;
  double degree = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    const PlantedGraph g = planted_partition(spec);
    mixing += g.realized_mixing / 20.0;
    degree += 2.0 * static_cast<double>(g.graph.m()) / g.graph.n() / 20.0;
  }
  CHECK(std::abs(mixing - 0.1) <= 0.03);
  CHECK(degree == doctest::Approx(20.0).epsilon(0.05));

  spec.seed = 7;
  const PlantedGraph a = planted_partition(spec);
  const PlantedGraph b = planted_partition(spec);
  CHECK(a.graph.edges() == b.graph.edges());
}

TEST_CASE("planted partition rejects infeasible specs") {
  CHECK_THROWS_AS(planted_partition(PlantedSpec{{50, 50}, 20.0, 0.5, 0}), InputError);
  CHECK_THROWS_AS(planted_partition(PlantedSpec{{50, 50}, 20.0, 0.99, 0}), InputError);
  CHECK_THROWS_AS(planted_partition(PlantedSpec{{5, 5}, 20.0, 0.1, 0}), InputError);
}

TEST_CASE("louvain") {
  const GeneratedGraph ideal = ideal_graph({5, 6, 7});
  const Partition p = louvain(ideal.graph, 3);
  CHECK(nmi(p, ideal.truth) == 1.0);
  const Eigen::MatrixXd a = Eigen::MatrixXd(ideal.graph.adjacency());
  const Eigen::MatrixXd z = ideal.truth.assignment_matrix();
  const double f = (z.transpose() * oracle::dense_modularity(a) * z).trace();
  CHECK(modularity_score(ideal.graph, p) == doctest::Approx(f / (2.0 * 46)).epsilon(1e-14));

  const GeneratedGraph clique = ideal_graph({6});
  const Partition one = louvain(clique.graph, 1);
  CHECK(one.community_count() == 1);
  CHECK(std::abs(modularity_score(clique.graph, one)) <= 1e-15);

  const Graph g = planted_partition(PlantedSpec{{40, 40, 40}, 10.0, 0.1, 3}).graph;
  CHECK(louvain(g, 5) == louvain(g, 5));
}

TEST_CASE("louvain on karate reaches the known optimum region") {
  std::ifstream in(STIEFELCD_DATA_DIR "/karate.edges");
  const Graph g = parse_edge_list(in).graph;
  double best = -1.0;
  int communities = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Partition p = louvain(g, seed);
    const double q = modularity_score(g, p);
    if (q > best) {
      best = q;
      communities = p.community_count();
    }
  }
  CHECK(best == doctest::Approx(0.419).epsilon(0.01));
  CHECK(communities == 4);
}

TEST_CASE("brute force on Z Z^T matches the closed form") {
  for (const auto& sizes : std::vector<std::vector<int>>{{3, 3}, {2, 2, 2}}) {
    std::vector<int> labels;
    for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), static_cast<std::size_t>(sizes[c]), static_cast<int>(c));
    const Partition truth(labels);
    const BruteForceResult r = brute_force_best_assignment(ideal_adjacency(truth), static_cast<int>(sizes.size()));
    CHECK(r.partition == truth);
    CHECK(r.value == doctest::Approx(oracle::ideal_assignment_value(sizes)).epsilon(1e-12));
  }
  CHECK(oracle::ideal_assignment_value({3, 3}) == 9.0);
  CHECK(oracle::ideal_assignment_value({2, 2, 2}) == 8.0);
  CHECK(oracle::ideal_assignment_value({2, 2}) == 4.0);
}

TEST_CASE("brute force on a path graph") {
  const Graph path(3, {{0, 1}, {1, 2}});
  const BruteForceResult r = brute_force_best_assignment(path, 2);
  // {01|2} and {0|12} tie at -0.5 and {02|1} gives -2; the tie goes to the
  // lexicographically smaller labeling.
  CHECK(r.partition.labels() == std::vector<int>{0, 0, 1});
  CHECK(r.value == doctest::Approx(-0.5));
}

TEST_CASE("random ideal specs: brute force recovers the planted labels") {
  Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    const int q = 2 + static_cast<int>(rng.below(2));
    std::vector<int> sizes;
    int n = 0;
    for (int c = 0; c < q; ++c) {
      const int s = 2 + static_cast<int>(rng.below(3));
      if (n + s > 10) break;
      sizes.push_back(s);
      n += s;
    }
    if (sizes.size() < 2) continue;
    std::vector<int> labels;
    for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), static_cast<std::size_t>(sizes[c]), static_cast<int>(c));
    const Partition truth(labels);
    const BruteForceResult r = brute_force_best_assignment(ideal_adjacency(truth), static_cast<int>(sizes.size()));
    CHECK(r.partition == truth);
    CHECK(std::abs(r.value - oracle::ideal_assignment_value(sizes)) <= 1e-9);
  }
}

TEST_CASE("brute force guard") {
  const Graph g(30, {{0, 1}});
  CHECK_THROWS_AS(brute_force_best_assignment(g, 3), InputError);
}
