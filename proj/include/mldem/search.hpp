#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mldem/descriptor.hpp"
#include "mldem/metrics.hpp"

namespace mldem {

/// R x R model-to-model distances; (i, j) = rho(X_i, X_j) with X_i in the
/// query role. Not necessarily symmetric.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t size) : size_(size), values_(size * size, 0.0) {}
  DistanceMatrix(std::size_t size, std::vector<double> values);

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * size_ + j]; }
  double& at(std::size_t i, std::size_t j) noexcept { return values_[i * size_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * size_, size_);
  }
  std::span<const double> values() const noexcept { return values_; }

  /// Matrix restricted to `ids`, in that order.
  DistanceMatrix submatrix(std::span<const std::size_t> ids) const;

 private:
  std::size_t size_ = 0;
  std::vector<double> values_;
};

DistanceMatrix build_distance_matrix(std::span<const PreparedDescriptor> models, const MetricConfig& metric);
DistanceMatrix build_distance_matrix(std::span<const GridDescriptor> models, const MetricConfig& metric);

/// beta-quantile of the off-diagonal entries: the entry at 1-based rank
/// max(1, ceil(beta * R * (R - 1))) of the ascending order.
/// Throws std::invalid_argument("threshold undefined") when R < 2.
double compute_threshold(const DistanceMatrix& matrix, double beta);

/// Standard normal CDF.
double normal_cdf(double x);

/// First model to check: argmax over mu of
///   sum_v prod_r Phi( sqrt(nK)/2 * |sqrt(rho_{r,mu}) - sqrt(rho_{v,mu})| ),
/// lowest index on ties. Evaluated in log space; factors that round to 1
/// are skipped, so the cost is well below R^3 when columns are spread out.
std::size_t select_first_model(const DistanceMatrix& matrix, double nK);

enum class Method { kBrute, kDem, kMlDem, kPermSort };
std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);

enum class PhiVariant { kSimplified, kFull };

/// Parameters of the per-checked-model likelihood penalty.
struct PhiParams {
  PhiVariant variant = PhiVariant::kSimplified;
  double p = 7.0;         // free parameters per block histogram (N - 1)
  double n = 1.0;         // samples per block
  double blocks = 1.0;    // K
};

/// Negative log-likelihood contribution (scaled) of observing query distance
/// `rho_query` to a checked model when the true class is mu and
/// rho_{mu, checked} = `rho_model`. In simplified mode a zero `rho_model`
/// uses p / n as the denominator and sets `*degenerate`.
double phi(double rho_query, double rho_model, const PhiParams& params, bool* degenerate = nullptr);

struct SearchConfig {
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  Method method = Method::kMlDem;
  std::size_t e_max = kUnlimited;  // clamped to the number of models searched
  std::size_t m = 64;              // DEM candidate set size
  std::size_t t = 1;               // parallel partitions
  PhiVariant phi_variant = PhiVariant::kSimplified;
  std::size_t p = 0;               // 0 selects N - 1
  std::size_t permsort_pivots = 32;
  double permsort_fraction = 0.1;
  std::optional<double> rho0_override;
};

struct SearchResult {
  int predicted_label = 0;
  std::size_t model_index = 0;
  double distance = std::numeric_limits<double>::infinity();
  std::size_t l_checks = 0;
  std::chrono::nanoseconds elapsed{0};
  bool terminated_early = false;
  std::size_t phi_degeneracies = 0;
  std::vector<std::size_t> checked;  // models in evaluation order

  bool found() const noexcept { return l_checks > 0; }
};

/// Distance from the current query to model `index`.
using DistanceOracle = std::function<double(std::size_t)>;

/// Precomputed data the greedy enumerations need, independent of descriptors.
struct EnumerationSpace {
  const DistanceMatrix& matrix;
  double rho0;
  std::size_t r1;
  PhiParams phi;
};

struct MlDemStep {
  std::size_t l_checks;
  std::span<const double> scores;          // running sum of phi per model
  std::span<const std::uint8_t> checked;   // 1 for models already evaluated
};
using MlDemObserver = std::function<void(const MlDemStep&)>;

// Enumerations over an abstract oracle. They fill model_index, distance,
// l_checks, terminated_early, phi_degeneracies and checked. A set `cancel`
// flag stops the enumeration before its next evaluation.
SearchResult enumerate_brute(std::size_t models, const DistanceOracle& oracle,
                             const std::atomic<bool>* cancel = nullptr);
SearchResult enumerate_dem(const EnumerationSpace& space, const SearchConfig& cfg, const DistanceOracle& oracle,
                           const std::atomic<bool>* cancel = nullptr);
SearchResult enumerate_mldem(const EnumerationSpace& space, const SearchConfig& cfg, const DistanceOracle& oracle,
                             const std::atomic<bool>* cancel = nullptr, const MlDemObserver* observer = nullptr);

/// Pivot permutations for the perm-sort baseline. ranks[r * P + p] is the
/// position of pivot p when model r sorts all pivots by its distance to them.
struct PermSortTable {
  std::vector<std::size_t> pivots;
  std::vector<std::uint32_t> ranks;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when pivots == 0 or pivots > R.
PermSortTable permsort_build(const DistanceMatrix& matrix, std::size_t pivots, std::uint64_t seed);

/// Ranks models by Spearman footrule against the query's pivot permutation
/// and evaluates the top ceil(fraction * R) (capped by e_max). Pivot
/// evaluations count toward l_checks; no model is evaluated twice.
SearchResult enumerate_permsort(const DistanceMatrix& matrix, const PermSortTable& table, const SearchConfig& cfg,
                                const DistanceOracle& oracle, const std::atomic<bool>* cancel = nullptr);

/// Immutable after construction; safe to share between concurrent searches.
class SearchIndex {
 public:
  static SearchIndex build(std::vector<GridDescriptor> models, const MetricConfig& metric, double beta);

  /// Assembles an index from persisted parts. Validates sizes.
  static SearchIndex from_parts(std::vector<GridDescriptor> models, DistanceMatrix matrix, const MetricConfig& metric,
                                double beta, double rho0, std::size_t r1, double nK);

  std::size_t size() const noexcept { return models_.size(); }
  std::size_t blocks() const noexcept { return models_.front().descriptor().blocks(); }
  std::size_t bins() const noexcept { return models_.front().descriptor().bins(); }

  const PreparedDescriptor& model(std::size_t i) const noexcept { return models_[i]; }
  std::span<const PreparedDescriptor> models() const noexcept { return models_; }
  const DistanceMatrix& matrix() const noexcept { return matrix_; }
  const MetricConfig& metric() const noexcept { return metric_; }
  double beta() const noexcept { return beta_; }
  double rho0() const noexcept { return rho0_; }
  std::size_t r1() const noexcept { return r1_; }
  double nK() const noexcept { return nK_; }

  void build_permsort(std::size_t pivots, std::uint64_t seed);
  const PermSortTable* permsort() const noexcept { return permsort_ ? &*permsort_ : nullptr; }

  PhiParams phi_params(const SearchConfig& cfg) const;

 private:
  SearchIndex() = default;

  std::vector<PreparedDescriptor> models_;
  DistanceMatrix matrix_;
  MetricConfig metric_;
  double beta_ = 0.01;
  double rho0_ = 0.0;
  std::size_t r1_ = 0;
  double nK_ = 1.0;
  std::optional<PermSortTable> permsort_;
};

/// Mean total sample count over the models, or K if every count is zero.
double mean_sample_mass(std::span<const GridDescriptor> models);

SearchResult brute_force_search(const SearchIndex& index, const GridDescriptor& query);
SearchResult dem_search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg);
SearchResult mldem_search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg,
                          const MlDemObserver* observer = nullptr);
/// Requires index.permsort(); see SearchIndex::build_permsort.
SearchResult permsort_search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg);

/// Dispatches on cfg.method, ignoring cfg.t.
SearchResult search(const SearchIndex& index, const GridDescriptor& query, const SearchConfig& cfg,
                    const std::atomic<bool>* cancel = nullptr);

}  // namespace mldem
