#include "mldem/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

namespace mldem {

PartitionedIndex::PartitionedIndex(const SearchIndex& index, std::size_t parts) : models_(index.size()) {
  if (parts == 0) throw std::invalid_argument("need at least one partition");
  if (parts > index.size()) throw std::invalid_argument("more partitions than models");
  ids_.resize(parts);
  for (std::size_t i = 0; i < index.size(); ++i) ids_[i % parts].push_back(i);

  parts_.reserve(parts);
  for (const auto& ids : ids_) {
    std::vector<GridDescriptor> models;
    models.reserve(ids.size());
    for (std::size_t i : ids) models.push_back(index.model(i).descriptor());
    DistanceMatrix sub = index.matrix().submatrix(ids);
    const double rho0 = ids.size() >= 2 ? compute_threshold(sub, index.beta()) : index.rho0();
    const std::size_t r1 = select_first_model(sub, index.nK());
    SearchIndex part =
        SearchIndex::from_parts(std::move(models), std::move(sub), index.metric(), index.beta(), rho0, r1, index.nK());
    if (const PermSortTable* table = index.permsort()) {
      part.build_permsort(std::min(table->pivots.size(), ids.size()), table->seed);
    }
    parts_.push_back(std::move(part));
  }
}

SearchConfig part_config(const SearchConfig& cfg, std::size_t part_size) {
  SearchConfig c = cfg;
  c.t = 1;
  c.e_max = std::min(cfg.e_max, part_size);
  return c;
}

SearchResult parallel_search(const PartitionedIndex& index, const GridDescriptor& query, const SearchConfig& cfg,
                             const ParallelOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t t = index.parts();
  std::vector<SearchResult> results(t);
  std::atomic<bool> stop{false};
  const std::atomic<bool>* cancel = options.cancellation ? &stop : nullptr;

  auto run_part = [&](std::size_t p) {
    const SearchIndex& part = index.part(p);
    results[p] = search(part, query, part_config(cfg, part.size()), cancel);
    if (results[p].terminated_early && options.cancellation) stop.store(true, std::memory_order_relaxed);
  };

  if (options.threaded && t > 1) {
    std::vector<std::jthread> workers;
    workers.reserve(t);
    for (std::size_t p = 0; p < t; ++p) workers.emplace_back(run_part, p);
  } else {
    for (std::size_t p = 0; p < t; ++p) run_part(p);
  }

  SearchResult merged;
  for (std::size_t p = 0; p < t; ++p) {
    const SearchResult& r = results[p];
    merged.l_checks += r.l_checks;
    merged.phi_degeneracies += r.phi_degeneracies;
    merged.terminated_early = merged.terminated_early || r.terminated_early;
    for (std::size_t local : r.checked) merged.checked.push_back(index.global_id(p, local));
    if (!r.found()) continue;
    const std::size_t global = index.global_id(p, r.model_index);
    if (r.distance < merged.distance || (r.distance == merged.distance && global < merged.model_index)) {
      merged.distance = r.distance;
      merged.model_index = global;
      merged.predicted_label = r.predicted_label;
    }
  }
  merged.elapsed = std::chrono::steady_clock::now() - start;
  return merged;
}

}  // namespace mldem
