#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mldem/descriptor.hpp"

namespace mldem {

enum class MetricKind { kKL, kHTPNN };

std::string_view to_string(MetricKind kind) noexcept;
/// Accepts "kl" or "htpnn". Throws std::invalid_argument otherwise.
MetricKind parse_metric_kind(std::string_view name);

inline constexpr double kDefaultLogFloor = 1e-12;

struct MetricConfig {
  MetricKind kind = MetricKind::kKL;
  std::size_t delta = 0;  // block alignment radius; 0 and 1 are the usual choices
  double epsilon = kDefaultLogFloor;
};

/// sum_i h[i] * ln(h[i] / max(g[i], epsilon)) with 0 * ln(0 / x) = 0.
double kl_divergence(std::span<const double> h, std::span<const double> g,
                     double epsilon = kDefaultLogFloor);
inline double kl_divergence(const Histogram& h, const Histogram& g, double epsilon = kDefaultLogFloor) {
  return kl_divergence(h.bins(), g.bins(), epsilon);
}

/// Homogeneity-testing divergence against the mixture (h + g) / 2. Symmetric.
double htpnn_distance(std::span<const double> h, std::span<const double> g,
                      double epsilon = kDefaultLogFloor);
inline double htpnn_distance(const Histogram& h, const Histogram& g, double epsilon = kDefaultLogFloor) {
  return htpnn_distance(h.bins(), g.bins(), epsilon);
}

/// Descriptor with cached per-block terms for the KL kernel:
/// floored log-bins and sum_i h_i ln h_i per block.
class PreparedDescriptor {
 public:
  explicit PreparedDescriptor(GridDescriptor desc, double epsilon = kDefaultLogFloor);

  const GridDescriptor& descriptor() const noexcept { return desc_; }
  std::span<const double> log_block(std::size_t k) const noexcept {
    return std::span<const double>(log_bins_).subspan(k * desc_.bins(), desc_.bins());
  }
  double neg_entropy(std::size_t k) const noexcept { return neg_entropy_[k]; }
  double epsilon() const noexcept { return epsilon_; }

 private:
  GridDescriptor desc_;
  double epsilon_;
  std::vector<double> log_bins_;
  std::vector<double> neg_entropy_;
};

/// Aligned grid distance: the mean over blocks of the smallest per-block
/// distance between the query block and any model block within `delta`
/// rows/cols (clipped at the grid border). `query` takes the first argument
/// of the per-block distance. Throws std::invalid_argument on shape mismatch.
double grid_distance(const PreparedDescriptor& query, const PreparedDescriptor& model, const MetricConfig& cfg);
double grid_distance(const GridDescriptor& query, const GridDescriptor& model, const MetricConfig& cfg);

}  // namespace mldem
