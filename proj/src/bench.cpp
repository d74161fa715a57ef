#include "mldem/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mldem/descriptor_io.hpp"
#include "mldem/parallel.hpp"

namespace mldem {

std::string method_label(const SearchConfig& cfg) {
  std::string label(to_string(cfg.method));
  if (cfg.method == Method::kMlDem && cfg.phi_variant == PhiVariant::kFull) label += "-full";
  if (cfg.t > 1) label += "/t" + std::to_string(cfg.t);
  return label;
}

void prepare_index(SearchIndex& index, std::span<const SearchConfig> methods, std::uint64_t seed) {
  if (index.permsort() != nullptr) return;
  for (const auto& cfg : methods) {
    if (cfg.method == Method::kPermSort) {
      index.build_permsort(std::min(cfg.permsort_pivots, index.size()), seed);
      return;
    }
  }
}

namespace {

// Runs one method over all queries and aggregates.
class MethodRunner {
 public:
  MethodRunner(const SearchIndex& index, const SearchConfig& cfg) : index_(index), cfg_(cfg) {
    if (cfg.t > 1) partitioned_ = std::make_unique<PartitionedIndex>(index, cfg.t);
  }

  SearchResult run(const GridDescriptor& query) const {
    if (partitioned_) return parallel_search(*partitioned_, query, cfg_);
    return search(index_, query, cfg_);
  }

  std::size_t effective_emax() const {
    const std::size_t scope = partitioned_ ? (index_.size() + cfg_.t - 1) / cfg_.t : index_.size();
    return std::min(cfg_.e_max, scope);
  }

 private:
  const SearchIndex& index_;
  SearchConfig cfg_;
  std::unique_ptr<PartitionedIndex> partitioned_;
};

std::vector<QueryOutcome> run_queries(const MethodRunner& runner, std::span<const GridDescriptor> queries,
                                      const BenchOptions& options) {
  std::vector<QueryOutcome> out(queries.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      const SearchResult r = runner.run(queries[q]);
      out[q] = QueryOutcome{queries[q].label(), r.predicted_label, r.model_index, r.distance,
                            r.l_checks,         r.terminated_early, r.elapsed};
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(queries.size(), 1));
  if (workers == 1) {
    work(0, queries.size());
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(work, w * queries.size() / workers, (w + 1) * queries.size() / workers);
    }
  }
  return out;
}

struct Aggregate {
  double error_rate = 0.0;
  double mean_l_checks = 0.0;
  double mean_elapsed_us = 0.0;
  double early_stop_rate = 0.0;
};

Aggregate aggregate(std::span<const QueryOutcome> outcomes) {
  Aggregate a;
  if (outcomes.empty()) return a;
  std::size_t errors = 0, early = 0;
  double checks = 0.0, elapsed = 0.0;
  for (const auto& o : outcomes) {
    errors += o.predicted != o.truth ? 1 : 0;
    early += o.early ? 1 : 0;
    checks += static_cast<double>(o.l_checks);
    elapsed += std::chrono::duration<double, std::micro>(o.elapsed).count();
  }
  const auto n = static_cast<double>(outcomes.size());
  a.error_rate = static_cast<double>(errors) / n;
  a.mean_l_checks = checks / n;
  a.mean_elapsed_us = elapsed / n;
  a.early_stop_rate = static_cast<double>(early) / n;
  return a;
}

void check_queries(const SearchIndex& index, std::span<const GridDescriptor> queries) {
  for (const auto& q : queries) {
    if (!q.same_shape(index.model(0).descriptor())) {
      throw std::invalid_argument("query dimensions differ from the indexed models");
    }
  }
}

}  // namespace

BenchReport run_benchmark(const SearchIndex& index, std::span<const GridDescriptor> queries,
                          std::span<const SearchConfig> methods, const BenchOptions& options) {
  if (queries.empty()) throw std::invalid_argument("no queries to benchmark");
  check_queries(index, queries);
  BenchReport report;
  report.models = index.size();
  const auto r = static_cast<double>(index.size());
  for (const auto& cfg : methods) {
    const MethodRunner runner(index, cfg);
    if (options.warmup) (void)runner.run(queries.front());
    auto outcomes = run_queries(runner, queries, options);
    const Aggregate a = aggregate(outcomes);
    BenchRow row;
    row.method = method_label(cfg);
    row.t = cfg.t;
    row.e_max = runner.effective_emax();
    row.queries = queries.size();
    row.error_rate = a.error_rate;
    row.mean_l_checks = a.mean_l_checks;
    row.mean_l_checks_ratio = a.mean_l_checks / r;
    row.mean_elapsed_us = a.mean_elapsed_us;
    row.early_stop_rate = a.early_stop_rate;
    report.rows.push_back(std::move(row));
    report.outcomes.push_back(std::move(outcomes));
  }
  return report;
}

BenchReport run_benchmark(std::vector<GridDescriptor> models, std::span<const GridDescriptor> queries,
                          const MetricConfig& metric, double beta, std::span<const SearchConfig> methods,
                          const BenchOptions& options) {
  if (models.empty()) throw std::invalid_argument("no models to benchmark");
  for (const auto& m : models) {
    if (!m.same_shape(models.front())) throw std::invalid_argument("models have different dimensions");
  }
  SearchIndex index = SearchIndex::build(std::move(models), metric, beta);
  prepare_index(index, methods);
  return run_benchmark(index, queries, methods, options);
}

std::vector<SweepRow> sweep_emax(const SearchIndex& index, std::span<const GridDescriptor> queries,
                                 const SearchConfig& cfg, std::span<const double> fractions,
                                 const BenchOptions& options) {
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("sweep fractions must lie in (0, 1]");
    SearchConfig c = cfg;
    c.e_max = static_cast<std::size_t>(std::ceil(f * static_cast<double>(index.size()) * (1.0 - 1e-12)));
    c.e_max = std::max<std::size_t>(c.e_max, 1);
    const SearchConfig one[] = {c};
    const BenchReport rep = run_benchmark(index, queries, one, options);
    const BenchRow& row = rep.rows.front();
    rows.push_back(SweepRow{f, c.e_max, row.error_rate, row.mean_l_checks_ratio, row.early_stop_rate,
                            row.mean_elapsed_us});
  }
  return rows;
}

void write_report_csv(std::ostream& out, const BenchReport& report) {
  out << "method,t,e_max,queries,error_rate,mean_l_checks,l_checks_ratio,mean_elapsed_us,early_stop_rate\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << r.t << ',' << r.e_max << ',' << r.queries << ',' << format_double(r.error_rate) << ','
        << format_double(r.mean_l_checks) << ',' << format_double(r.mean_l_checks_ratio) << ','
        << format_double(r.mean_elapsed_us) << ',' << format_double(r.early_stop_rate) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::string& method, std::span<const SweepRow> rows) {
  out << "method,fraction,e_max,error_rate,l_checks_ratio,early_stop_rate,mean_elapsed_us\n";
  for (const auto& r : rows) {
    out << method << ',' << format_double(r.fraction) << ',' << r.e_max << ',' << format_double(r.error_rate) << ','
        << format_double(r.mean_l_checks_ratio) << ',' << format_double(r.early_stop_rate) << ','
        << format_double(r.mean_elapsed_us) << '\n';
  }
}

}  // namespace mldem
