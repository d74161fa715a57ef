#pragma once

#include <cstddef>
#include <vector>

#include "mldem/search.hpp"

namespace mldem {

/// T disjoint parts of an index, models assigned round-robin by index.
/// Every part carries its own matrix, threshold (same beta, recomputed on
/// the part) and first model. Parts with fewer than two models inherit the
/// parent's threshold.
class PartitionedIndex {
 public:
  /// Throws std::invalid_argument when parts == 0 or parts > R.
  PartitionedIndex(const SearchIndex& index, std::size_t parts);

  std::size_t parts() const noexcept { return parts_.size(); }
  std::size_t models() const noexcept { return models_; }
  const SearchIndex& part(std::size_t p) const noexcept { return parts_[p]; }
  std::size_t global_id(std::size_t p, std::size_t local) const noexcept { return ids_[p][local]; }

 private:
  std::vector<SearchIndex> parts_;
  std::vector<std::vector<std::size_t>> ids_;
  std::size_t models_ = 0;
};

/// Per-part configuration: e_max is bounded by the part size.
SearchConfig part_config(const SearchConfig& cfg, std::size_t part_size);

struct ParallelOptions {
  bool cancellation = true;  // first part to reach its threshold stops the others
  bool threaded = true;      // false runs parts one after another on the caller's thread
};

/// Runs cfg.method on every part concurrently and returns the closest model
/// among all parts' best candidates (global indices, lowest index on ties).
/// l_checks is the total across parts; terminated_early is set if any part
/// reached its threshold.
SearchResult parallel_search(const PartitionedIndex& index, const GridDescriptor& query, const SearchConfig& cfg,
                             const ParallelOptions& options = {});

}  // namespace mldem
