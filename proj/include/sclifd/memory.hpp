#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sclifd/dataio.hpp"
#include "sclifd/matrix.hpp"

namespace sclifd {

struct StoredExemplar {
  Sample sample;
  std::size_t source_index = 0;  // row in the originating dataset
  std::optional<double> ratio;   // AdaHerding majority ratio, when applicable
};

/// Fixed-capacity rehearsal buffer. Per-class lists are prioritized:
/// earlier entries survive rebalancing.
struct MemoryBuffer {
  std::size_t capacity = 0;
  std::map<int, std::vector<StoredExemplar>> per_class;

  std::size_t total_stored() const;
};

/// Greedy mean-matching selection: pick p_k minimizing
/// ||mu - (phi(x) + sum_{j<k} phi(p_j)) / k||, ties to the lowest index.
std::vector<std::size_t> herding_select(const Matrix& features, std::size_t m);

struct AdaherdingResult {
  std::vector<std::size_t> selected;  // indices into query_rows, hardest first
  std::vector<double> ratios;         // majority ratio per query, query order
};

/// Majority-ratio ranking. query_rows locate the class's samples inside the
/// context; each query's n nearest context rows (Euclidean, excluding the
/// query itself, distance ties to the lower row) are counted and
/// r = (#neighbors with a different label) / n. Queries are sorted by r
/// descending, ties by ascending query index, and the first m are kept.
AdaherdingResult adaherding_select(const Matrix& context_features,
                                   const std::vector<int>& context_labels,
                                   const std::vector<std::size_t>& query_rows, int n_neighbors,
                                   std::size_t m);

/// Seeded shuffle baseline selector.
std::vector<std::size_t> random_select(std::size_t count, std::size_t m, std::uint64_t seed);

/// Truncates every class list to m = floor(capacity / t_seen), keeping the
/// head of each prioritized list.
void rebalance(MemoryBuffer& buffer, std::size_t t_seen);

/// Ascending class id, then priority order.
std::vector<std::pair<Sample, int>> buffer_flatten(const MemoryBuffer& buffer);

}  // namespace sclifd
