#pragma once

#include <vector>

#include "stiefelcd/partition.hpp"

namespace stiefelcd {

/// Joint counts n_uv of two labelings of the same nodes. Rows and columns
/// follow the normalized label order of each partition.
struct ContingencyTable {
  std::vector<std::vector<long>> counts;
  std::vector<long> a;  // row sums
  std::vector<long> b;  // column sums
  long total = 0;

  static ContingencyTable from(const Partition& x, const Partition& y);
};

double entropy(const std::vector<long>& sizes, long total);
double mutual_information(const ContingencyTable& t);

/// Expected mutual information under the hypergeometric model. The inner
/// sum starts at max(1, a_u + b_v - N); the n_uv = 0 term is zero.
double expected_mutual_information(const ContingencyTable& t);

/// 2 I / (H(X) + H(Y)); 1 when both are single-community.
double nmi(const Partition& x, const Partition& y);

/// (I - E{I}) / (max(H(X), H(Y)) - E{I}); 1 when the denominator vanishes.
double ami(const Partition& x, const Partition& y);

}  // namespace stiefelcd
