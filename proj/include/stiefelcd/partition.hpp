#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <vector>

#include <Eigen/Core>

namespace stiefelcd {

/// Node -> community labeling. Labels are non-negative integers; they need
/// not be dense until normalized().
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  /// Number of distinct labels in use.
  int community_count() const;

  /// Relabels communities densely as 0..k-1 in order of first appearance.
  Partition normalized() const;

  /// n x k matrix with a single 1 per row (k = max label + 1). With
  /// `unit_columns`, each non-empty column is scaled to unit 2-norm.
  Eigen::MatrixXd assignment_matrix(bool unit_columns = false) const;

  /// Labels after applying `order`: result[i] = labels[order[i]].
  Partition permuted(const std::vector<int>& order) const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> labels_;
};

/// One integer label per line; blank lines and `#` comments are skipped.
Partition read_labels(std::istream& in);
void write_labels(std::ostream& out, const Partition& p);

}  // namespace stiefelcd
