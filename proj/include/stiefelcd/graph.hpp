#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "stiefelcd/partition.hpp"

namespace stiefelcd {

/// Undirected simple graph on nodes 0..n-1.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  /// Builds from an edge list; pairs are canonicalized to (min, max),
  /// duplicates collapsed and self-loops dropped.
  Graph(int n, const std::vector<Edge>& edges);

  int n() const noexcept { return n_; }
  std::int64_t m() const noexcept { return static_cast<std::int64_t>(edges_.size()); }

  /// Sorted, deduplicated edges with first < second.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& degrees() const noexcept { return degrees_; }
  const Eigen::SparseMatrix<double>& adjacency() const noexcept { return adjacency_; }

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<int> degrees_;
  Eigen::SparseMatrix<double> adjacency_;
};

enum class IndexBase { kAuto, kZero, kOne };

struct ParsedGraph {
  Graph graph;
  /// Original token for each internal node id.
  std::vector<std::string> labels;
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

/// Reads a whitespace separated edge list. `#` and `%` start comments.
///
/// With kAuto, integer tokens are mapped to ids in increasing numeric order
/// and any other token set in order of first appearance. kZero/kOne take the
/// integer token as the id (minus one for kOne), so unused ids become
/// isolated nodes. A first line "# <N> nodes ..." fixes the node count, and
/// under kAuto makes integer ids in [0, N) be read as 0-based.
ParsedGraph parse_edge_list(std::istream& in, IndexBase base = IndexBase::kAuto);

void write_edge_list(std::ostream& out, const Graph& g);

/// `original_label internal_id` per line.
void write_label_map(std::ostream& out, const std::vector<std::string>& labels);

/// Matrix-free M = A - d d^T / 2m with d = A 1.
class ModularityOperator {
 public:
  explicit ModularityOperator(const Graph& g);

  int n() const noexcept { return static_cast<int>(degree_.size()); }
  const Eigen::VectorXd& degree() const noexcept { return degree_; }
  double two_m() const noexcept { return two_m_; }

  /// A V - d (d^T V) / 2m, column by column.
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const;

  /// tr(X^T M X).
  double quadratic(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> adjacency_;
  Eigen::VectorXd degree_;
  double two_m_;
};

/// Newman modularity Q = tr(X^T M X) / 2m of a labeling.
double modularity_score(const Graph& g, const Partition& p);

}  // namespace stiefelcd
