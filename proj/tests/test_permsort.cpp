#include <algorithm>
#include <set>

#include "doctest.h"
#include "mldem/search.hpp"
#include "mldem/synth.hpp"

using namespace mldem;

namespace {

SynthDataset small_data(std::size_t classes, std::uint64_t seed) {
  SynthSpec spec;
  spec.classes = classes;
  spec.rows = spec.cols = 3;
  spec.samples_per_block = 80;
  spec.seed = seed;
  return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("permsort_build") {
  const auto data = small_data(30, 1);
  const auto index = SearchIndex::build(data.models, MetricConfig{}, 0.01);
  const auto table = permsort_build(index.matrix(), 8, 99);
  CHECK(table.pivots.size() == 8);
  CHECK(std::set<std::size_t>(table.pivots.begin(), table.pivots.end()).size() == 8);
  REQUIRE(table.ranks.size() == 30 * 8);
  for (std::size_t m = 0; m < 30; ++m) {
    std::vector<std::uint32_t> r(table.ranks.begin() + m * 8, table.ranks.begin() + (m + 1) * 8);
    std::sort(r.begin(), r.end());
    for (std::uint32_t i = 0; i < 8; ++i) CHECK(r[i] == i);
    // a pivot is closest to itself
    for (std::size_t p = 0; p < 8; ++p) {
      if (table.pivots[p] == m) CHECK(table.ranks[m * 8 + p] == 0);
    }
  }
  const auto again = permsort_build(index.matrix(), 8, 99);
  CHECK(again.pivots == table.pivots);
  CHECK(again.ranks == table.ranks);
  CHECK_THROWS_AS(permsort_build(index.matrix(), 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(permsort_build(index.matrix(), 31, 1), std::invalid_argument);
}

TEST_CASE("perm-sort search") {
  const auto data = small_data(50, 4);
  auto index = SearchIndex::build(data.models, MetricConfig{}, 0.01);
  index.build_permsort(10, 3);

  SUBCASE("evaluates pivots plus the top fraction, never twice") {
    SearchConfig cfg;
    cfg.method = Method::kPermSort;
    cfg.permsort_fraction = 0.2;
    for (const auto& q : data.queries) {
      const auto res = search(index, q, cfg);
      const std::set<std::size_t> unique(res.checked.begin(), res.checked.end());
      CHECK(unique.size() == res.checked.size());
      CHECK(res.l_checks >= 10);
      CHECK(res.l_checks <= 10 + 10);
      for (std::size_t p : index.permsort()->pivots) CHECK(unique.count(p) == 1);
    }
  }
  SUBCASE("full fraction is exhaustive") {
    SearchConfig cfg;
    cfg.method = Method::kPermSort;
    cfg.permsort_fraction = 1.0;
    for (std::size_t qi = 0; qi < data.queries.size(); qi += 5) {
      const auto res = search(index, data.queries[qi], cfg);
      const auto brute = brute_force_search(index, data.queries[qi]);
      CHECK(res.l_checks == index.size());
      CHECK(res.model_index == brute.model_index);
    }
  }
  SUBCASE("e_max caps the ranked candidates") {
    SearchConfig cfg;
    cfg.method = Method::kPermSort;
    cfg.permsort_fraction = 1.0;
    cfg.e_max = 3;
    const auto res = search(index, data.queries[0], cfg);
    CHECK(res.l_checks <= 13);
  }
  SUBCASE("fraction outside (0, 1]") {
    SearchConfig cfg;
    cfg.method = Method::kPermSort;
    cfg.permsort_fraction = 0.0;
    CHECK_THROWS_AS(search(index, data.queries[0], cfg), std::invalid_argument);
  }
}
