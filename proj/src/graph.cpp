#include "stiefelcd/graph.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "stiefelcd/error.hpp"

namespace stiefelcd {

Graph::Graph(int n, const std::vector<Edge>& edges) : n_(n), degrees_(static_cast<std::size_t>(std::max(n, 0)), 0) {
  if (n <= 0) throw InputError("graph must have at least one node");
  edges_.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range for n = " +
                       std::to_string(n));
    }
    if (u == v) continue;
    edges_.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges_.size());
  for (auto [u, v] : edges_) {
    ++degrees_[static_cast<std::size_t>(u)];
    ++degrees_[static_cast<std::size_t>(v)];
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  adjacency_.resize(n, n);
  adjacency_.setFromTriplets(triplets.begin(), triplets.end());
  adjacency_.makeCompressed();
}

namespace {

// "# <N> nodes ..." as written by write_generated-style headers.
std::optional<long long> header_node_count(const std::string& comment) {
  std::istringstream in(comment);
  std::string hash;
  std::string word;
  long long n = 0;
  if (in >> hash >> n >> word && hash == "#" && word.rfind("nodes", 0) == 0 && n > 0) return n;
  return std::nullopt;
}

bool parse_int(const std::string& token, long long& value) {
  const char* first = token.data();
  const char* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

}  // namespace

ParsedGraph parse_edge_list(std::istream& in, IndexBase base) {
  std::vector<std::pair<std::string, std::string>> raw;
  std::string line;
  std::size_t lineno = 0;
  std::optional<long long> declared_nodes;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto cut = line.find_first_of("#%"); cut != std::string::npos) {
      if (lineno == 1) declared_nodes = header_node_count(line.substr(cut));
      line.erase(cut);
    }
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(std::move(t));
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw ParseError(lineno, "expected exactly two node tokens, found " + std::to_string(tokens.size()));
    }
    if (base != IndexBase::kAuto) {
      long long value = 0;
      for (const auto& t : tokens) {
        if (!parse_int(t, value)) throw ParseError(lineno, "node '" + t + "' is not an integer");
        const long long lowest = base == IndexBase::kOne ? 1 : 0;
        if (value < lowest || value > std::numeric_limits<int>::max()) {
          throw ParseError(lineno, "node id '" + t + "' out of range");
        }
      }
    }
    raw.emplace_back(std::move(tokens[0]), std::move(tokens[1]));
  }
  if (raw.empty()) throw InputError("edge list contains no edges");

  // A node-count header keeps isolated nodes: integer ids are then 0-based.
  if (base == IndexBase::kAuto && declared_nodes) {
    long long value = 0;
    bool fits = true;
    for (const auto& [a, b] : raw) {
      fits = fits && parse_int(a, value) && value >= 0 && value < *declared_nodes;
      fits = fits && parse_int(b, value) && value >= 0 && value < *declared_nodes;
    }
    if (fits) base = IndexBase::kZero;
  }

  std::unordered_map<std::string, int> ids;
  std::vector<std::string> labels;
  if (base == IndexBase::kAuto) {
    bool all_integer = true;
    long long value = 0;
    for (const auto& [a, b] : raw) all_integer = all_integer && parse_int(a, value) && parse_int(b, value);
    if (all_integer) {
      std::map<long long, std::string> ordered;
      for (const auto& [a, b] : raw) {
        parse_int(a, value);
        ordered.try_emplace(value, a);
        parse_int(b, value);
        ordered.try_emplace(value, b);
      }
      for (const auto& [key, token] : ordered) {
        ids.emplace(token, static_cast<int>(labels.size()));
        labels.push_back(token);
      }
      // Tokens like "07" and "7" denote the same node.
      for (const auto& [a, b] : raw) {
        for (const auto* t : {&a, &b}) {
          if (!ids.contains(*t)) {
            parse_int(*t, value);
            ids.emplace(*t, ids.at(ordered.at(value)));
          }
        }
      }
    } else {
      for (const auto& [a, b] : raw) {
        for (const auto* t : {&a, &b}) {
          if (ids.try_emplace(*t, static_cast<int>(labels.size())).second) labels.push_back(*t);
        }
      }
    }
  } else {
    const long long offset = base == IndexBase::kOne ? 1 : 0;
    long long max_id = -1;
    long long value = 0;
    for (const auto& [a, b] : raw) {
      for (const auto* t : {&a, &b}) {
        parse_int(*t, value);
        ids.try_emplace(*t, static_cast<int>(value - offset));
        max_id = std::max(max_id, value - offset);
      }
    }
    if (declared_nodes && *declared_nodes > max_id + 1 && *declared_nodes <= std::numeric_limits<int>::max()) {
      max_id = *declared_nodes - 1;
    }
    labels.resize(static_cast<std::size_t>(max_id + 1));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::to_string(static_cast<long long>(i) + offset);
  }

  std::vector<Graph::Edge> edges;
  edges.reserve(raw.size());
  std::size_t self_loops = 0;
  for (const auto& [a, b] : raw) {
    const int u = ids.at(a);
    const int v = ids.at(b);
    if (u == v) {
      ++self_loops;
    } else {
      edges.emplace_back(u, v);
    }
  }
  Graph g(static_cast<int>(labels.size()), edges);
  const std::size_t duplicates = edges.size() - static_cast<std::size_t>(g.m());
  return ParsedGraph{std::move(g), std::move(labels), duplicates, self_loops};
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_label_map(std::ostream& out, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) out << labels[i] << ' ' << i << '\n';
}

ModularityOperator::ModularityOperator(const Graph& g)
    : adjacency_(g.adjacency()), degree_(g.n()), two_m_(2.0 * static_cast<double>(g.m())) {
  for (int i = 0; i < g.n(); ++i) degree_(i) = g.degrees()[static_cast<std::size_t>(i)];
}

Eigen::MatrixXd ModularityOperator::apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
  if (v.rows() != n()) {
    throw DimensionError("modularity operator expects " + std::to_string(n()) + " rows, got " +
                         std::to_string(v.rows()));
  }
  Eigen::MatrixXd out = adjacency_ * v;
  if (two_m_ > 0) {
    const Eigen::RowVectorXd weights = (degree_.transpose() * v) / two_m_;
    out.noalias() -= degree_ * weights;
  }
  return out;
}

double ModularityOperator::quadratic(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::MatrixXd mx = apply(x);
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) total += x.col(j).dot(mx.col(j));
  return total;
}

double modularity_score(const Graph& g, const Partition& p) {
  if (p.size() != static_cast<std::size_t>(g.n())) {
    throw DimensionError("partition labels " + std::to_string(p.size()) + " nodes, graph has " +
                         std::to_string(g.n()));
  }
  if (g.m() == 0) return 0.0;
  const ModularityOperator op(g);
  return op.quadratic(p.normalized().assignment_matrix()) / op.two_m();
}

}  // namespace stiefelcd
