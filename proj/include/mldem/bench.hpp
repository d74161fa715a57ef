#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mldem/search.hpp"

namespace mldem {

struct BenchOptions {
  std::size_t workers = 1;  // > 1 fans queries out over threads; 1 is the timing mode
  bool warmup = true;       // one untimed query per method before measuring
};

struct QueryOutcome {
  int truth = 0;
  int predicted = 0;
  std::size_t model_index = 0;
  double distance = 0.0;
  std::size_t l_checks = 0;
  bool early = false;
  std::chrono::nanoseconds elapsed{0};
};

struct BenchRow {
  std::string method;
  std::size_t t = 1;
  std::size_t e_max = 0;  // effective cap per search (per part when t > 1)
  std::size_t queries = 0;
  double error_rate = 0.0;
  double mean_l_checks = 0.0;
  double mean_l_checks_ratio = 0.0;  // L_checks / R
  double mean_elapsed_us = 0.0;
  double early_stop_rate = 0.0;
};

struct BenchReport {
  std::size_t models = 0;
  std::vector<BenchRow> rows;
  std::vector<std::vector<QueryOutcome>> outcomes;  // parallel to rows
};

/// Label used in reports, e.g. "mldem" or "dem/t8".
std::string method_label(const SearchConfig& cfg);

/// Builds the perm-sort table on `index` if any config needs it and it is missing.
void prepare_index(SearchIndex& index, std::span<const SearchConfig> methods, std::uint64_t seed = 7);

/// Runs every configured method over every query. Throws std::invalid_argument
/// on dimension mismatch and std::logic_error if perm-sort is requested but
/// the index has no table.
BenchReport run_benchmark(const SearchIndex& index, std::span<const GridDescriptor> queries,
                          std::span<const SearchConfig> methods, const BenchOptions& options = {});

/// Builds the index (matrix, threshold, first model, perm-sort table when
/// needed) and runs the benchmark.
BenchReport run_benchmark(std::vector<GridDescriptor> models, std::span<const GridDescriptor> queries,
                          const MetricConfig& metric, double beta, std::span<const SearchConfig> methods,
                          const BenchOptions& options = {});

struct SweepRow {
  double fraction = 0.0;
  std::size_t e_max = 0;
  double error_rate = 0.0;
  double mean_l_checks_ratio = 0.0;
  double early_stop_rate = 0.0;
  double mean_elapsed_us = 0.0;
};

/// Runs `cfg` with e_max = ceil(f * R) for every fraction f in (0, 1].
std::vector<SweepRow> sweep_emax(const SearchIndex& index, std::span<const GridDescriptor> queries,
                                 const SearchConfig& cfg, std::span<const double> fractions,
                                 const BenchOptions& options = {});

// CSV with a header row.
// report: method,t,e_max,queries,error_rate,mean_l_checks,l_checks_ratio,mean_elapsed_us,early_stop_rate
// sweep:  method,fraction,e_max,error_rate,l_checks_ratio,early_stop_rate,mean_elapsed_us
void write_report_csv(std::ostream& out, const BenchReport& report);
void write_sweep_csv(std::ostream& out, const std::string& method, std::span<const SweepRow> rows);

}  // namespace mldem
