#include "stiefelcd/partition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <unordered_map>

#include "stiefelcd/error.hpp"

namespace stiefelcd {

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
  for (int l : labels_) {
    if (l < 0) throw InputError("community labels must be non-negative");
  }
}

int Partition::community_count() const {
  std::vector<int> seen = labels_;
  std::sort(seen.begin(), seen.end());
  return static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

Partition Partition::normalized() const {
  std::unordered_map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels_.size());
  for (int l : labels_) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return Partition(std::move(out));
}

Eigen::MatrixXd Partition::assignment_matrix(bool unit_columns) const {
  const int k = labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end()) + 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels_.size()), k);
  for (std::size_t i = 0; i < labels_.size(); ++i) x(static_cast<Eigen::Index>(i), labels_[i]) = 1.0;
  if (unit_columns) {
    for (int j = 0; j < k; ++j) {
      const double count = x.col(j).sum();
      if (count > 0) x.col(j) /= std::sqrt(count);
    }
  }
  return x;
}

Partition Partition::permuted(const std::vector<int>& order) const {
  if (order.size() != labels_.size()) throw DimensionError("permutation length differs from partition size");
  std::vector<int> out(labels_.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = labels_.at(static_cast<std::size_t>(order[i]));
  return Partition(std::move(out));
}

Partition read_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::string extra;
    if (fields >> extra) throw ParseError(lineno, "expected a single label, got more tokens");
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(token, &used);
    } catch (const std::exception&) {
      throw ParseError(lineno, "label '" + token + "' is not an integer");
    }
    if (used != token.size() || value < 0) throw ParseError(lineno, "label '" + token + "' is not a non-negative integer");
    labels.push_back(value);
  }
  if (labels.empty()) throw InputError("label file is empty");
  return Partition(std::move(labels));
}

void write_labels(std::ostream& out, const Partition& p) {
  for (int l : p.labels()) out << l << '\n';
}

}  // namespace stiefelcd
