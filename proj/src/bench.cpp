#include "stiefelcd/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "stiefelcd/error.hpp"
#include "stiefelcd/random.hpp"

namespace stiefelcd {

namespace {

void check_sizes(const std::vector<int>& sizes, int minimum) {
  if (sizes.empty()) throw InputError("at least one community size is required");
  for (int s : sizes) {
    if (s < minimum) throw InputError("community size " + std::to_string(s) + " is below " + std::to_string(minimum));
  }
}

std::vector<int> block_labels(const std::vector<int>& sizes) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), static_cast<std::size_t>(sizes[c]), static_cast<int>(c));
  return labels;
}

GeneratedGraph build_ideal(const std::vector<int>& sizes, const std::vector<int>& node_of) {
  check_sizes(sizes, 2);
  const std::vector<int> block = block_labels(sizes);
  const int n = static_cast<int>(block.size());
  std::vector<Graph::Edge> edges;
  int start = 0;
  for (int s : sizes) {
    for (int i = start; i < start + s; ++i)
      for (int j = i + 1; j < start + s; ++j) edges.emplace_back(node_of[i], node_of[j]);
    start += s;
  }
  std::vector<int> truth(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(node_of[i])] = block[static_cast<std::size_t>(i)];
  return {Graph(n, edges), Partition(std::move(truth))};
}

}  // namespace

GeneratedGraph ideal_graph(const std::vector<int>& sizes) {
  check_sizes(sizes, 2);
  std::vector<int> identity(static_cast<std::size_t>(std::accumulate(sizes.begin(), sizes.end(), 0)));
  std::iota(identity.begin(), identity.end(), 0);
  return build_ideal(sizes, identity);
}

GeneratedGraph ideal_graph(const std::vector<int>& sizes, std::uint64_t shuffle_seed) {
  check_sizes(sizes, 2);
  std::vector<int> order(static_cast<std::size_t>(std::accumulate(sizes.begin(), sizes.end(), 0)));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  rng.shuffle(order);
  return build_ideal(sizes, order);
}

PlantedGraph planted_partition(const PlantedSpec& spec) {
  check_sizes(spec.sizes, 2);
  if (spec.sizes.size() < 2) throw InputError("planted partition needs at least two communities");
  const double total = std::accumulate(spec.sizes.begin(), spec.sizes.end(), 0.0);
  const double largest = *std::max_element(spec.sizes.begin(), spec.sizes.end());
  const double mu_limit = (total - largest) / total;
  if (!(spec.mixing >= 0.0) || spec.mixing >= mu_limit) {
    std::ostringstream msg;
    msg << "mixing " << spec.mixing << " outside the feasible range [0, " << mu_limit << ")";
    throw InputError(msg.str());
  }
  if (!(spec.avg_degree > 0.0)) throw InputError("average degree must be positive");

  PlantedGraph out{Graph(1, {}), Partition(), {}, 0.0, 0.0};
  double pair_mass = 0.0;
  for (int s : spec.sizes) pair_mass += s * (total - s);
  out.p_out = spec.mixing * spec.avg_degree * total / pair_mass;
  for (int s : spec.sizes) out.p_in.push_back((1.0 - spec.mixing) * spec.avg_degree / (s - 1));
  auto infeasible = [&](double p) {
    std::ostringstream msg;
    msg << "edge probability " << p << " exceeds 1; lower the average degree or change the mixing";
    throw InputError(msg.str());
  };
  for (double p : out.p_in)
    if (p > 1.0) infeasible(p);
  if (out.p_out > 1.0) infeasible(out.p_out);

  const std::vector<int> labels = block_labels(spec.sizes);
  const int n = static_cast<int>(labels.size());
  Rng rng(spec.seed);
  std::vector<Graph::Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int ci = labels[static_cast<std::size_t>(i)];
      const double p = ci == labels[static_cast<std::size_t>(j)] ? out.p_in[static_cast<std::size_t>(ci)] : out.p_out;
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }
  }
  out.graph = Graph(n, edges);
  out.truth = Partition(labels);

  std::vector<int> external(static_cast<std::size_t>(n), 0);
  for (const auto& [i, j] : out.graph.edges()) {
    if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) {
      ++external[static_cast<std::size_t>(i)];
      ++external[static_cast<std::size_t>(j)];
    }
  }
  double sum = 0.0;
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    const int d = out.graph.degrees()[static_cast<std::size_t>(i)];
    if (d == 0) continue;
    sum += static_cast<double>(external[static_cast<std::size_t>(i)]) / d;
    ++counted;
  }
  out.realized_mixing = counted > 0 ? sum / counted : 0.0;
  return out;
}

namespace {

// Weighted graph with self-loop weights, used by the aggregation phase.
struct WeightedGraph {
  std::vector<std::vector<std::pair<int, double>>> neighbors;  // excludes self
  std::vector<double> self_loop;                               // twice the internal weight
  std::vector<double> strength;                                // includes self_loop
  double two_m = 0.0;
};

WeightedGraph from_graph(const Graph& g) {
  WeightedGraph w;
  const auto n = static_cast<std::size_t>(g.n());
  w.neighbors.resize(n);
  w.self_loop.assign(n, 0.0);
  w.strength.assign(n, 0.0);
  for (const auto& [i, j] : g.edges()) {
    w.neighbors[static_cast<std::size_t>(i)].emplace_back(j, 1.0);
    w.neighbors[static_cast<std::size_t>(j)].emplace_back(i, 1.0);
    w.strength[static_cast<std::size_t>(i)] += 1.0;
    w.strength[static_cast<std::size_t>(j)] += 1.0;
  }
  w.two_m = 2.0 * static_cast<double>(g.m());
  return w;
}

// One level of local moves. Returns true if any node changed community.
bool move_nodes(const WeightedGraph& w, std::vector<int>& community, Rng& rng) {
  const int n = static_cast<int>(w.neighbors.size());
  std::vector<double> total(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) total[static_cast<std::size_t>(community[static_cast<std::size_t>(i)])] += w.strength[static_cast<std::size_t>(i)];

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<double> link(static_cast<std::size_t>(n), 0.0);
  std::vector<int> touched;
  bool any = false;
  for (bool improved = true; improved;) {
    improved = false;
    for (int i : order) {
      const auto ui = static_cast<std::size_t>(i);
      const int own = community[ui];
      const double k = w.strength[ui];
      touched.clear();
      touched.push_back(own);
      link[static_cast<std::size_t>(own)] = 0.0;
      for (const auto& [j, weight] : w.neighbors[ui]) {
        const int c = community[static_cast<std::size_t>(j)];
        if (std::find(touched.begin(), touched.end(), c) == touched.end()) touched.push_back(c);
        link[static_cast<std::size_t>(c)] += weight;
      }
      total[static_cast<std::size_t>(own)] -= k;

      int best = own;
      double best_gain = link[static_cast<std::size_t>(own)] - total[static_cast<std::size_t>(own)] * k / w.two_m;
      for (int c : touched) {
        const double gain = link[static_cast<std::size_t>(c)] - total[static_cast<std::size_t>(c)] * k / w.two_m;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best = c;
        }
      }
      total[static_cast<std::size_t>(best)] += k;
      for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
      if (best != own) {
        community[ui] = best;
        improved = true;
        any = true;
      }
    }
  }
  return any;
}

WeightedGraph aggregate(const WeightedGraph& w, const std::vector<int>& community, int count) {
  WeightedGraph out;
  const auto k = static_cast<std::size_t>(count);
  out.neighbors.resize(k);
  out.self_loop.assign(k, 0.0);
  out.strength.assign(k, 0.0);
  out.two_m = w.two_m;
  std::vector<std::map<int, double>> links(k);
  for (std::size_t i = 0; i < w.neighbors.size(); ++i) {
    const int ci = community[i];
    out.self_loop[static_cast<std::size_t>(ci)] += w.self_loop[i];
    out.strength[static_cast<std::size_t>(ci)] += w.strength[i];
    for (const auto& [j, weight] : w.neighbors[i]) {
      const int cj = community[static_cast<std::size_t>(j)];
      if (ci == cj) {
        out.self_loop[static_cast<std::size_t>(ci)] += weight;
      } else {
        links[static_cast<std::size_t>(ci)][cj] += weight;
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) out.neighbors[c].assign(links[c].begin(), links[c].end());
  return out;
}

}  // namespace

Partition louvain(const Graph& g, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(g.n());
  std::vector<int> membership(n);
  std::iota(membership.begin(), membership.end(), 0);
  if (g.m() == 0) return Partition(std::move(membership));

  Rng rng(seed);
  WeightedGraph level = from_graph(g);
  for (;;) {
    std::vector<int> community(level.neighbors.size());
    std::iota(community.begin(), community.end(), 0);
    if (!move_nodes(level, community, rng)) break;
    // Dense relabel in order of first appearance.
    std::vector<int> remap(community.size(), -1);
    int count = 0;
    for (int& c : community) {
      if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = count++;
      c = remap[static_cast<std::size_t>(c)];
    }
    for (int& m : membership) m = community[static_cast<std::size_t>(m)];
    if (count == static_cast<int>(community.size())) break;
    level = aggregate(level, community, count);
  }
  return Partition(std::move(membership)).normalized();
}

Eigen::MatrixXd ideal_adjacency(const Partition& p) {
  const Eigen::MatrixXd z = p.assignment_matrix();
  return z * z.transpose();
}

BruteForceResult brute_force_best_assignment(const Eigen::Ref<const Eigen::MatrixXd>& adjacency, int q) {
  const auto n = static_cast<int>(adjacency.rows());
  if (adjacency.cols() != n) throw DimensionError("adjacency must be square");
  if (q < 1 || q > n) throw InputError("brute force needs 1 <= q <= n");
  if (std::pow(static_cast<double>(q), n) > 1e7) {
    throw InputError("brute force limited to q^n <= 1e7 (got q = " + std::to_string(q) + ", n = " + std::to_string(n) +
                     ")");
  }
  const Eigen::VectorXd degree = adjacency.rowwise().sum();
  const double two_m = degree.sum();
  auto value_of = [&](const std::vector<int>& labels) {
    std::vector<double> inner(static_cast<std::size_t>(q), 0.0);
    std::vector<double> deg(static_cast<std::size_t>(q), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto ci = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      deg[ci] += degree(i);
      for (int j = 0; j < n; ++j) {
        if (labels[static_cast<std::size_t>(j)] == static_cast<int>(ci)) inner[ci] += adjacency(i, j);
      }
    }
    double f = 0.0;
    for (std::size_t c = 0; c < inner.size(); ++c) f += inner[c] - (two_m > 0 ? deg[c] * deg[c] / two_m : 0.0);
    return f;
  };

  // Restricted growth strings: label[0] = 0, label[i] <= 1 + max(label[0..i-1]).
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<int> prefix_max(static_cast<std::size_t>(n), 0);
  BruteForceResult best;
  bool have = false;
  for (;;) {
    if (prefix_max[static_cast<std::size_t>(n - 1)] == q - 1) {
      const double f = value_of(labels);
      if (!have || f > best.value) {
        best.value = f;
        best.partition = Partition(labels);
        have = true;
      }
    }
    int i = n - 1;
    while (i > 0) {
      const auto ui = static_cast<std::size_t>(i);
      const int limit = std::min(q - 1, prefix_max[ui - 1] + 1);
      if (labels[ui] < limit) break;
      --i;
    }
    if (i == 0) break;
    const auto ui = static_cast<std::size_t>(i);
    ++labels[ui];
    prefix_max[ui] = std::max(prefix_max[ui - 1], labels[ui]);
    for (auto j = ui + 1; j < labels.size(); ++j) {
      labels[j] = 0;
      prefix_max[j] = prefix_max[j - 1];
    }
  }
  if (!have) throw InputError("no labeling with exactly q communities");
  return best;
}

BruteForceResult brute_force_best_assignment(const Graph& g, int q) {
  return brute_force_best_assignment(Eigen::MatrixXd(g.adjacency()), q);
}

}  // namespace stiefelcd
