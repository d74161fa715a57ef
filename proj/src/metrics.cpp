#include "mldem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mldem {

std::string_view to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::kKL:
      return "kl";
    case MetricKind::kHTPNN:
      return "htpnn";
  }
  return "unknown";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "kl") return MetricKind::kKL;
  if (name == "htpnn") return MetricKind::kHTPNN;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "' (expected kl or htpnn)");
}

namespace {

void check_sizes(std::span<const double> h, std::span<const double> g) {
  if (h.size() != g.size()) {
    throw std::invalid_argument("histogram size mismatch: " + std::to_string(h.size()) + " vs " +
                                std::to_string(g.size()));
  }
}

}  // namespace

double kl_divergence(std::span<const double> h, std::span<const double> g, double epsilon) {
  check_sizes(h, g);
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] <= 0.0) continue;
    sum += h[i] * std::log(h[i] / std::max(g[i], epsilon));
  }
  return std::max(sum, 0.0);
}

double htpnn_distance(std::span<const double> h, std::span<const double> g, double epsilon) {
  check_sizes(h, g);
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double mix = std::max(h[i] + g[i], epsilon);
    const double a = h[i] > 0.0 ? h[i] * std::log(2.0 * h[i] / mix) : 0.0;
    const double b = g[i] > 0.0 ? g[i] * std::log(2.0 * g[i] / mix) : 0.0;
    sum += a + b;
  }
  return std::max(sum, 0.0);
}

PreparedDescriptor::PreparedDescriptor(GridDescriptor desc, double epsilon)
    : desc_(std::move(desc)), epsilon_(epsilon) {
  const auto values = desc_.values();
  log_bins_.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) log_bins_[i] = std::log(std::max(values[i], epsilon_));
  neg_entropy_.assign(desc_.blocks(), 0.0);
  for (std::size_t k = 0; k < desc_.blocks(); ++k) {
    const auto b = desc_.block(k);
    const auto lb = log_block(k);
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] > 0.0) s += b[i] * lb[i];
    }
    neg_entropy_[k] = s;
  }
}

namespace {

// KL for one block pair from cached logs. Matches kl_divergence up to rounding.
double cached_kl(const PreparedDescriptor& x, std::size_t kx, const PreparedDescriptor& m, std::size_t km) {
  const auto xb = x.descriptor().block(kx);
  const auto lm = m.log_block(km);
  double cross = 0.0;
  for (std::size_t i = 0; i < xb.size(); ++i) cross += xb[i] * lm[i];
  return std::max(x.neg_entropy(kx) - cross, 0.0);
}

}  // namespace

double grid_distance(const PreparedDescriptor& query, const PreparedDescriptor& model, const MetricConfig& cfg) {
  const GridDescriptor& x = query.descriptor();
  const GridDescriptor& m = model.descriptor();
  if (!x.same_shape(m)) throw std::invalid_argument("descriptor shapes differ");

  const bool use_cache = cfg.kind == MetricKind::kKL && query.epsilon() == cfg.epsilon &&
                         model.epsilon() == cfg.epsilon;
  auto block_distance = [&](std::size_t kx, std::size_t km) {
    if (use_cache) return cached_kl(query, kx, model, km);
    if (cfg.kind == MetricKind::kKL) return kl_divergence(x.block(kx), m.block(km), cfg.epsilon);
    return htpnn_distance(x.block(kx), m.block(km), cfg.epsilon);
  };

  const auto rows = static_cast<std::ptrdiff_t>(x.rows());
  const auto cols = static_cast<std::ptrdiff_t>(x.cols());
  const auto delta = static_cast<std::ptrdiff_t>(cfg.delta);
  double total = 0.0;
  for (std::ptrdiff_t s1 = 0; s1 < rows; ++s1) {
    for (std::ptrdiff_t s2 = 0; s2 < cols; ++s2) {
      const auto kx = static_cast<std::size_t>(s1 * cols + s2);
      if (delta == 0) {
        total += block_distance(kx, kx);
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (std::ptrdiff_t r = std::max<std::ptrdiff_t>(0, s1 - delta); r <= std::min(rows - 1, s1 + delta); ++r) {
        for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, s2 - delta); c <= std::min(cols - 1, s2 + delta);
             ++c) {
          best = std::min(best, block_distance(kx, static_cast<std::size_t>(r * cols + c)));
        }
      }
      total += best;
    }
  }
  return total / static_cast<double>(x.blocks());
}

double grid_distance(const GridDescriptor& query, const GridDescriptor& model, const MetricConfig& cfg) {
  if (!query.same_shape(model)) throw std::invalid_argument("descriptor shapes differ");
  return grid_distance(PreparedDescriptor(query, cfg.epsilon), PreparedDescriptor(model, cfg.epsilon), cfg);
}

}  // namespace mldem
