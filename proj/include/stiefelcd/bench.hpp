#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stiefelcd/graph.hpp"
#include "stiefelcd/partition.hpp"

namespace stiefelcd {

struct GeneratedGraph {
  Graph graph;
  Partition truth;
};

/// Disjoint cliques of the given sizes (each >= 2), no self-loops. With a
/// seed, node ids are shuffled.
GeneratedGraph ideal_graph(const std::vector<int>& sizes);
GeneratedGraph ideal_graph(const std::vector<int>& sizes, std::uint64_t shuffle_seed);

struct PlantedSpec {
  std::vector<int> sizes;
  double avg_degree = 20.0;
  double mixing = 0.1;
  std::uint64_t seed = 0;
};

struct PlantedGraph {
  Graph graph;
  Partition truth;
  std::vector<double> p_in;  // per community
  double p_out = 0.0;
  /// Mean over nodes with edges of external degree / degree.
  double realized_mixing = 0.0;
};

/// Intra pairs of community c are joined with p_in,c = (1 - mu) k / (n_c - 1),
/// inter pairs with p_out = mu k N / sum_c n_c (N - n_c), so each node has
/// expected degree k and expected external fraction mu.
PlantedGraph planted_partition(const PlantedSpec& spec);

/// Greedy modularity optimization with node moves and aggregation.
Partition louvain(const Graph& g, std::uint64_t seed = 0);

struct BruteForceResult {
  Partition partition;
  double value = 0.0;  // tr(X^T M X) with X the 0/1 assignment matrix
};

/// Exhaustive search over labelings with at most q communities, one per
/// label permutation class. Ties go to the lexicographically smallest
/// canonical labeling. Requires q^n <= 1e7.
BruteForceResult brute_force_best_assignment(const Eigen::Ref<const Eigen::MatrixXd>& adjacency, int q);
BruteForceResult brute_force_best_assignment(const Graph& g, int q);

/// Dense Z Z^T for the assignment of `p`, unit diagonal included.
Eigen::MatrixXd ideal_adjacency(const Partition& p);

}  // namespace stiefelcd
