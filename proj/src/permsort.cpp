#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "mldem/search.hpp"

namespace mldem {

namespace {

// Position of each pivot slot when pivots are sorted by `dist(slot)`,
// ties broken by slot.
template <typename Dist>
void pivot_ranks(std::size_t count, Dist dist, std::vector<std::size_t>& order, std::uint32_t* out) {
  order.resize(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = dist(a);
    const double db = dist(b);
    return da < db || (da == db && a < b);
  });
  for (std::size_t pos = 0; pos < count; ++pos) out[order[pos]] = static_cast<std::uint32_t>(pos);
}

}  // namespace

PermSortTable permsort_build(const DistanceMatrix& matrix, std::size_t pivots, std::uint64_t seed) {
  const std::size_t r = matrix.size();
  if (pivots == 0) throw std::invalid_argument("perm-sort needs at least one pivot");
  if (pivots > r) throw std::invalid_argument("more pivots than models");

  PermSortTable table;
  table.seed = seed;
  std::vector<std::size_t> all(r);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(table.pivots), pivots, rng);

  table.ranks.resize(r * pivots);
  std::vector<std::size_t> order;
  for (std::size_t m = 0; m < r; ++m) {
    pivot_ranks(
        pivots, [&](std::size_t p) { return matrix(m, table.pivots[p]); }, order, table.ranks.data() + m * pivots);
  }
  return table;
}

SearchResult enumerate_permsort(const DistanceMatrix& matrix, const PermSortTable& table, const SearchConfig& cfg,
                                const DistanceOracle& oracle, const std::atomic<bool>* cancel) {
  const std::size_t r = matrix.size();
  if (r == 0) throw std::invalid_argument("empty index");
  const std::size_t pivots = table.pivots.size();
  if (pivots == 0 || table.ranks.size() != r * pivots) throw std::invalid_argument("perm-sort table does not match index");
  if (!(cfg.permsort_fraction > 0.0 && cfg.permsort_fraction <= 1.0)) {
    throw std::invalid_argument("perm-sort fraction must lie in (0, 1]");
  }

  SearchResult result;
  std::vector<double> known(r, std::numeric_limits<double>::quiet_NaN());
  auto evaluate = [&](std::size_t j) {
    if (!std::isnan(known[j])) return known[j];
    const double d = oracle(j);
    known[j] = d;
    result.checked.push_back(j);
    ++result.l_checks;
    if (d < result.distance || (d == result.distance && j < result.model_index)) {
      result.distance = d;
      result.model_index = j;
    }
    return d;
  };

  if (cancel != nullptr && cancel->load(std::memory_order_relaxed)) return result;
  std::vector<double> pivot_dist(pivots);
  for (std::size_t p = 0; p < pivots; ++p) pivot_dist[p] = evaluate(table.pivots[p]);

  std::vector<std::uint32_t> query_ranks(pivots);
  std::vector<std::size_t> order;
  pivot_ranks(pivots, [&](std::size_t p) { return pivot_dist[p]; }, order, query_ranks.data());

  std::vector<std::pair<std::uint64_t, std::size_t>> ranked(r);
  for (std::size_t m = 0; m < r; ++m) {
    const std::uint32_t* mr = table.ranks.data() + m * pivots;
    std::uint64_t footrule = 0;
    for (std::size_t p = 0; p < pivots; ++p) {
      footrule += mr[p] > query_ranks[p] ? mr[p] - query_ranks[p] : query_ranks[p] - mr[p];
    }
    ranked[m] = {footrule, m};
  }
  const auto wanted = static_cast<std::size_t>(std::ceil(cfg.permsort_fraction * static_cast<double>(r)));
  const std::size_t take = std::clamp<std::size_t>(std::min(wanted, cfg.e_max), 1, r);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
  for (std::size_t c = 0; c < take; ++c) {
    if (cancel != nullptr && cancel->load(std::memory_order_relaxed)) break;
    evaluate(ranked[c].second);
  }
  return result;
}

}  // namespace mldem
