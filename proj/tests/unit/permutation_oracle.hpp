#pragma once

#include <cmath>
#include <vector>

#include "stiefelcd/metrics.hpp"
#include "stiefelcd/random.hpp"

namespace oracle {

struct MonteCarlo {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Mutual information averaged over uniformly random relabelings of y's
// nodes, i.e. the permutation model with fixed marginals.
inline MonteCarlo permutation_mutual_information(const stiefelcd::Partition& x, const stiefelcd::Partition& y,
                                                 long samples, std::uint64_t seed) {
  stiefelcd::Rng rng(seed);
  std::vector<int> labels = y.labels();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long s = 0; s < samples; ++s) {
    rng.shuffle(labels);
    const double mi =
        stiefelcd::mutual_information(stiefelcd::ContingencyTable::from(x, stiefelcd::Partition(labels)));
    sum += mi;
    sum_sq += mi * mi;
  }
  const double mean = sum / static_cast<double>(samples);
  const double var = std::max(sum_sq / static_cast<double>(samples) - mean * mean, 0.0);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

inline stiefelcd::Partition random_partition(stiefelcd::Rng& rng, int n, int k) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  return stiefelcd::Partition(std::move(labels));
}

}  // namespace oracle
