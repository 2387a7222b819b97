#include "stiefelcd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stiefelcd/error.hpp"

namespace stiefelcd {

namespace {

constexpr long kMaxNodes = 1000000;

void check_sizes(const Partition& x, const Partition& y) {
  if (x.size() != y.size()) {
    throw DimensionError("partitions cover " + std::to_string(x.size()) + " and " + std::to_string(y.size()) +
                         " nodes");
  }
  if (x.size() == 0) throw InputError("partitions are empty");
}

}  // namespace

ContingencyTable ContingencyTable::from(const Partition& x, const Partition& y) {
  check_sizes(x, y);
  const Partition px = x.normalized();
  const Partition py = y.normalized();
  ContingencyTable t;
  const auto rows = static_cast<std::size_t>(px.community_count());
  const auto cols = static_cast<std::size_t>(py.community_count());
  t.counts.assign(rows, std::vector<long>(cols, 0));
  t.a.assign(rows, 0);
  t.b.assign(cols, 0);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto u = static_cast<std::size_t>(px[i]);
    const auto v = static_cast<std::size_t>(py[i]);
    ++t.counts[u][v];
    ++t.a[u];
    ++t.b[v];
  }
  t.total = static_cast<long>(px.size());
  return t;
}

double entropy(const std::vector<long>& sizes, long total) {
  double h = 0.0;
  const auto n = static_cast<double>(total);
  for (long s : sizes) {
    if (s > 0) h -= (s / n) * std::log(s / n);
  }
  return h;
}

double mutual_information(const ContingencyTable& t) {
  const auto n = static_cast<double>(t.total);
  double mi = 0.0;
  for (std::size_t u = 0; u < t.a.size(); ++u) {
    for (std::size_t v = 0; v < t.b.size(); ++v) {
      const long c = t.counts[u][v];
      if (c == 0) continue;
      mi += (c / n) * std::log(n * c / (static_cast<double>(t.a[u]) * static_cast<double>(t.b[v])));
    }
  }
  return std::max(mi, 0.0);
}

double expected_mutual_information(const ContingencyTable& t) {
  const long n = t.total;
  if (n > kMaxNodes) throw InputError("expected mutual information limited to 1e6 nodes");
  std::vector<double> lf(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) lf[static_cast<std::size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
  auto logfact = [&](long i) { return lf[static_cast<std::size_t>(i)]; };

  const auto nd = static_cast<double>(n);
  double emi = 0.0;
  for (long a : t.a) {
    for (long b : t.b) {
      const long lo = std::max(1L, a + b - n);
      const long hi = std::min(a, b);
      const double fixed = logfact(a) + logfact(b) + logfact(n - a) + logfact(n - b) - logfact(n);
      for (long k = lo; k <= hi; ++k) {
        const double log_p =
            fixed - logfact(k) - logfact(a - k) - logfact(b - k) - logfact(n - a - b + k);
        emi += (k / nd) * std::log(nd * k / (static_cast<double>(a) * static_cast<double>(b))) * std::exp(log_p);
      }
    }
  }
  return emi;
}

double nmi(const Partition& x, const Partition& y) {
  const ContingencyTable t = ContingencyTable::from(x, y);
  const double hx = entropy(t.a, t.total);
  const double hy = entropy(t.b, t.total);
  if (hx + hy == 0.0 || x.normalized() == y.normalized()) return 1.0;
  return std::clamp(2.0 * mutual_information(t) / (hx + hy), 0.0, 1.0);
}

double ami(const Partition& x, const Partition& y) {
  const ContingencyTable t = ContingencyTable::from(x, y);
  const double hx = entropy(t.a, t.total);
  const double hy = entropy(t.b, t.total);
  // Identical partitions give I = H exactly; avoid rounding in the ratio.
  if (x.normalized() == y.normalized()) return 1.0;
  const double emi = expected_mutual_information(t);
  const double denom = std::max(hx, hy) - emi;
  if (std::abs(denom) < 1e-15) return 1.0;
  return std::min((mutual_information(t) - emi) / denom, 1.0);
}

}  // namespace stiefelcd
