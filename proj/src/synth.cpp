#include "mldem/synth.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "mldem/metrics.hpp"

namespace mldem {

void SynthSpec::validate() const {
  if (classes == 0 || rows == 0 || cols == 0 || bins == 0 || samples_per_block == 0 || queries_per_class == 0) {
    throw std::invalid_argument("synthetic spec counts must all be at least 1");
  }
  if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("Dirichlet alpha must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("smoothing sigma must be non-negative");
}

std::vector<double> sample_dirichlet(std::size_t bins, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(bins);
  double sum = 0.0;
  do {
    sum = 0.0;
    for (double& v : out) {
      v = gamma(rng);
      sum += v;
    }
  } while (!(sum > 0.0));
  for (double& v : out) v /= sum;
  return out;
}

std::vector<std::uint64_t> sample_multinomial(std::uint64_t draws, std::span<const double> probs,
                                              std::mt19937_64& rng) {
  std::vector<std::uint64_t> counts(probs.size(), 0);
  std::uint64_t left = draws;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < probs.size() && left > 0; ++i) {
    const double q = mass > 0.0 ? std::clamp(probs[i] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<long long> binom(static_cast<long long>(left), q);
    const auto x = static_cast<std::uint64_t>(binom(rng));
    counts[i] = x;
    left -= x;
    mass -= probs[i];
  }
  if (!probs.empty()) counts.back() += left;
  return counts;
}

namespace {

// Descriptor whose blocks are normalized multinomial samples of `bases`.
GridDescriptor sample_descriptor(const SynthSpec& spec, std::span<const double> bases, int label,
                                 const SmoothingKernel* kernel, std::mt19937_64& rng) {
  const std::size_t blocks = spec.rows * spec.cols;
  std::vector<double> values(blocks * spec.bins);
  const auto n = static_cast<std::uint64_t>(spec.samples_per_block);
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto counts = sample_multinomial(n, bases.subspan(k * spec.bins, spec.bins), rng);
    std::vector<double> h(spec.bins);
    for (std::size_t i = 0; i < spec.bins; ++i) h[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    if (kernel != nullptr) h = smooth(h, *kernel);
    std::copy(h.begin(), h.end(), values.begin() + static_cast<std::ptrdiff_t>(k * spec.bins));
  }
  return GridDescriptor(label, spec.rows, spec.cols, spec.bins, std::move(values),
                        std::vector<std::uint64_t>(blocks, n));
}

std::vector<double> sample_bases(const SynthSpec& spec, std::mt19937_64& rng) {
  const std::size_t blocks = spec.rows * spec.cols;
  std::vector<double> bases;
  bases.reserve(blocks * spec.bins);
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto b = sample_dirichlet(spec.bins, spec.dirichlet_alpha, rng);
    bases.insert(bases.end(), b.begin(), b.end());
  }
  return bases;
}

}  // namespace

SynthDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::optional<SmoothingKernel> kernel;
  if (spec.sigma > 0.0) kernel = build_smoothing_kernel(spec.bins, spec.sigma);
  const SmoothingKernel* k = kernel ? &*kernel : nullptr;

  SynthDataset data;
  data.models.reserve(spec.classes);
  data.queries.reserve(spec.classes * spec.queries_per_class);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const auto bases = sample_bases(spec, rng);
    const auto label = static_cast<int>(c);
    data.models.push_back(sample_descriptor(spec, bases, label, k, rng));
    for (std::size_t q = 0; q < spec.queries_per_class; ++q) {
      data.queries.push_back(sample_descriptor(spec, bases, label, k, rng));
    }
  }
  return data;
}

AsymptoticsReport validate_asymptotics(const SynthSpec& spec, std::size_t trials,
                                       const AsymptoticsTolerance& tolerance) {
  spec.validate();
  if (trials < 2) throw std::invalid_argument("need at least two trials");
  std::mt19937_64 rng(spec.seed);
  const MetricConfig metric{MetricKind::kKL, 0, kDefaultLogFloor};

  AsymptoticsReport rep;
  rep.trials = trials;
  rep.blocks = spec.rows * spec.cols;
  rep.p = static_cast<double>(spec.bins - 1);
  rep.n = static_cast<double>(spec.samples_per_block);
  const double k = static_cast<double>(rep.blocks);
  const double scale = 2.0 * rep.n * k;

  // Welford accumulators.
  double mean = 0.0, m2 = 0.0, shift = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const GridDescriptor own = sample_descriptor(spec, sample_bases(spec, rng), 0, nullptr, rng);
    const GridDescriptor other = sample_descriptor(spec, sample_bases(spec, rng), 1, nullptr, rng);
    const GridDescriptor query = sample_descriptor(spec, own.values(), 0, nullptr, rng);

    const double stat = scale * grid_distance(query, own, metric);
    const double delta = stat - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (stat - mean);

    const double excess = grid_distance(query, other, metric) - grid_distance(own, other, metric);
    shift += (excess - shift) / static_cast<double>(t + 1);
  }

  rep.same_mean = mean;
  rep.same_variance = m2 / static_cast<double>(trials - 1);
  rep.reference_mean = k * rep.p;
  rep.reference_variance = 2.0 * k * rep.p;
  rep.mean_error = std::abs(rep.same_mean - rep.reference_mean) / rep.reference_mean;
  rep.variance_error = std::abs(rep.same_variance - rep.reference_variance) / rep.reference_variance;
  rep.shift_mean = shift;
  rep.reference_shift = rep.p / (2.0 * rep.n);
  rep.shift_error = std::abs(rep.shift_mean - rep.reference_shift) / rep.reference_shift;
  rep.mean_ok = rep.mean_error <= tolerance.mean;
  rep.variance_ok = rep.variance_error <= tolerance.variance;
  rep.shift_ok = rep.shift_error <= tolerance.shift;
  return rep;
}

}  // namespace mldem
