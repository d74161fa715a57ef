#include <set>

#include "doctest.h"
#include "mldem/parallel.hpp"
#include "mldem/synth.hpp"

using namespace mldem;

namespace {

struct Setup {
  SearchIndex index;
  std::vector<GridDescriptor> queries;
};

Setup make_setup(std::size_t classes, std::uint64_t seed) {
  SynthSpec spec;
  spec.classes = classes;
  spec.rows = spec.cols = 3;
  spec.samples_per_block = 80;
  spec.seed = seed;
  auto data = generate_synthetic(spec);
  return {SearchIndex::build(std::move(data.models), MetricConfig{}, 0.01), std::move(data.queries)};
}

}  // namespace

TEST_CASE("partitioning") {
  const auto s = make_setup(23, 1);
  const PartitionedIndex parts(s.index, 4);
  CHECK(parts.parts() == 4);
  CHECK(parts.models() == 23);
  std::set<std::size_t> seen;
  for (std::size_t p = 0; p < 4; ++p) {
    const auto& part = parts.part(p);
    CHECK(part.size() >= 5);
    CHECK(part.size() <= 6);
    for (std::size_t i = 0; i < part.size(); ++i) {
      const std::size_t g = parts.global_id(p, i);
      CHECK(seen.insert(g).second);
      CHECK(part.model(i).descriptor() == s.index.model(g).descriptor());
      for (std::size_t j = 0; j < part.size(); ++j) CHECK(part.matrix()(i, j) == s.index.matrix()(g, parts.global_id(p, j)));
    }
    CHECK(part.rho0() == compute_threshold(part.matrix(), s.index.beta()));
    CHECK(part.r1() == select_first_model(part.matrix(), s.index.nK()));
  }
  CHECK(seen.size() == 23);
  CHECK_THROWS_AS(PartitionedIndex(s.index, 0), std::invalid_argument);
  CHECK_THROWS_AS(PartitionedIndex(s.index, 24), std::invalid_argument);

  const PartitionedIndex singles(s.index, 23);
  CHECK(singles.part(0).rho0() == s.index.rho0());
}

TEST_CASE("part_config bounds the budget") {
  SearchConfig cfg;
  cfg.t = 4;
  cfg.e_max = 10;
  CHECK(part_config(cfg, 6).e_max == 6);
  CHECK(part_config(cfg, 30).e_max == 10);
  CHECK(part_config(cfg, 30).t == 1);
}

TEST_CASE("parallel search without early stopping matches brute force") {
  const auto s = make_setup(40, 2);
  for (std::size_t t : {1, 2, 4, 8}) {
    const PartitionedIndex parts(s.index, t);
    for (Method method : {Method::kBrute, Method::kDem, Method::kMlDem}) {
      SearchConfig cfg;
      cfg.method = method;
      cfg.t = t;
      cfg.rho0_override = 0.0;
      for (std::size_t qi = 0; qi < s.queries.size(); qi += 3) {
        const auto brute = brute_force_search(s.index, s.queries[qi]);
        for (bool threaded : {false, true}) {
          const auto res = parallel_search(parts, s.queries[qi], cfg, ParallelOptions{true, threaded});
          CHECK(res.l_checks == 40);
          CHECK(res.model_index == brute.model_index);
          CHECK(res.distance == brute.distance);
          CHECK(res.predicted_label == brute.predicted_label);
          const std::set<std::size_t> unique(res.checked.begin(), res.checked.end());
          CHECK(unique.size() == 40);
        }
      }
    }
  }
}

TEST_CASE("parallel search with thresholds") {
  const auto s = make_setup(60, 3);
  const PartitionedIndex parts(s.index, 4);
  SearchConfig cfg;
  cfg.t = 4;
  cfg.e_max = 8;
  for (const auto& q : s.queries) {
    const auto res = parallel_search(parts, q, cfg, ParallelOptions{false, false});
    CHECK(res.l_checks <= 4 * 8);
    CHECK(res.found());
    CHECK(res.predicted_label == s.index.model(res.model_index).descriptor().label());
    const auto sequential = parallel_search(parts, q, cfg, ParallelOptions{false, true});
    CHECK(sequential.model_index == res.model_index);
    CHECK(sequential.l_checks == res.l_checks);
  }
}
