#include "sclifd/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sclifd {

std::size_t MemoryBuffer::total_stored() const {
  std::size_t n = 0;
  for (const auto& [cls, list] : per_class) n += list.size();
  return n;
}

std::vector<std::size_t> herding_select(const Matrix& features, std::size_t m) {
  const std::size_t n = features.n_rows;
  const std::size_t e = features.n_cols;
  if (n == 0) throw std::runtime_error("herding_select: empty feature set");
  if (m == 0) throw std::runtime_error("herding_select: m must be >= 1");

  std::vector<double> mean(e, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < e; ++c) mean[c] += features(r, c);
  for (double& v : mean) v /= static_cast<double>(n);

  std::vector<std::size_t> picks;
  std::vector<bool> chosen(n, false);
  std::vector<double> sum(e, 0.0);  // running sum of chosen feature rows

  const std::size_t target = std::min(m, n);
  for (std::size_t k = 1; k <= target; ++k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = n;
    for (std::size_t r = 0; r < n; ++r) {
      if (chosen[r]) continue;
      double dist2 = 0.0;
      for (std::size_t c = 0; c < e; ++c) {
        const double d = mean[c] - (sum[c] + features(r, c)) / static_cast<double>(k);
        dist2 += d * d;
      }
      if (dist2 < best) {  // strict: ties keep the lowest index
        best = dist2;
        best_idx = r;
      }
    }
    chosen[best_idx] = true;
    picks.push_back(best_idx);
    for (std::size_t c = 0; c < e; ++c) sum[c] += features(best_idx, c);
  }
  return picks;
}

AdaherdingResult adaherding_select(const Matrix& context_features,
                                   const std::vector<int>& context_labels,
                                   const std::vector<std::size_t>& query_rows, int n_neighbors,
                                   std::size_t m) {
  const std::size_t ctx = context_features.n_rows;
  if (context_labels.size() != ctx)
    throw std::runtime_error("adaherding_select: context label count mismatch");
  if (n_neighbors < 1) throw std::runtime_error("adaherding_select: n_neighbors must be >= 1");
  if (ctx <= static_cast<std::size_t>(n_neighbors))
    throw std::runtime_error("adaherding_select: context of " + std::to_string(ctx) +
                             " rows is too small for " + std::to_string(n_neighbors) +
                             " neighbors");
  if (query_rows.empty()) throw std::runtime_error("adaherding_select: no query rows");
  for (std::size_t q : query_rows)
    if (q >= ctx) throw std::runtime_error("adaherding_select: query row out of range");

  AdaherdingResult res;
  res.ratios.resize(query_rows.size());

  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(ctx - 1);
  for (std::size_t qi = 0; qi < query_rows.size(); ++qi) {
    const std::size_t q = query_rows[qi];
    dist.clear();
    for (std::size_t r = 0; r < ctx; ++r) {
      if (r == q) continue;
      dist.emplace_back(
          squared_distance(context_features.row(q), context_features.row(r), context_features.n_cols),
          r);
    }
    std::partial_sort(dist.begin(), dist.begin() + n_neighbors, dist.end());
    int other = 0;
    for (int k = 0; k < n_neighbors; ++k)
      if (context_labels[dist[static_cast<std::size_t>(k)].second] != context_labels[q]) ++other;
    res.ratios[qi] = static_cast<double>(other) / static_cast<double>(n_neighbors);
  }

  std::vector<std::size_t> order(query_rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return res.ratios[a] > res.ratios[b];  // descending ratio; stable keeps index order
  });
  const std::size_t keep = std::min(m, order.size());
  res.selected.assign(order.begin(), order.begin() + keep);
  return res;
}

std::vector<std::size_t> random_select(std::size_t count, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(m, count));
  return idx;
}

void rebalance(MemoryBuffer& buffer, std::size_t t_seen) {
  if (t_seen == 0) throw std::runtime_error("rebalance: t_seen must be >= 1");
  const std::size_t per_class = buffer.capacity / t_seen;
  for (auto& [cls, list] : buffer.per_class)
    if (list.size() > per_class) list.resize(per_class);
}

std::vector<std::pair<Sample, int>> buffer_flatten(const MemoryBuffer& buffer) {
  std::vector<std::pair<Sample, int>> out;
  out.reserve(buffer.total_stored());
  for (const auto& [cls, list] : buffer.per_class)
    for (const StoredExemplar& ex : list) out.emplace_back(ex.sample, cls);
  return out;
}

}  // namespace sclifd
