#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mldem/descriptor.hpp"

namespace mldem {

/// Parameters of the seeded Dirichlet-multinomial generator. Every class
/// owns one base distribution per block; models and queries are normalized
/// multinomial count vectors drawn from those bases.
struct SynthSpec {
  std::size_t classes = 1000;
  std::size_t rows = 10;
  std::size_t cols = 10;
  std::size_t bins = 8;
  std::size_t samples_per_block = 200;
  std::size_t queries_per_class = 2;
  double dirichlet_alpha = 1.0;
  std::uint64_t seed = 1;
  double sigma = 0.0;  // optional kernel smoothing of the generated histograms

  void validate() const;
};

struct SynthDataset {
  std::vector<GridDescriptor> models;   // one per class, label = class id
  std::vector<GridDescriptor> queries;  // queries_per_class per class, grouped by class
};

SynthDataset generate_synthetic(const SynthSpec& spec);

std::vector<double> sample_dirichlet(std::size_t bins, double alpha, std::mt19937_64& rng);
std::vector<std::uint64_t> sample_multinomial(std::uint64_t draws, std::span<const double> probs,
                                              std::mt19937_64& rng);

struct AsymptoticsTolerance {
  double mean = 0.15;      // relative error of the mean of 2nK*rho against K*p
  double variance = 0.30;  // relative error of the variance against 2K*p
  double shift = 0.30;     // relative error of the different-class shift against p/(2n)
};

/// Monte-Carlo check of the large-sample law of the grid KL distance.
/// Same-class pairs: a model drawn from a class base and a query drawn from
/// the model's histograms, so 2nK*rho should follow chi^2 with K*p degrees
/// of freedom (n = samples per block, p = N - 1). Different-class pairs: the
/// mean of rho(X, X_r) - rho(X_v, X_r) should approach p / (2n).
struct AsymptoticsReport {
  std::size_t trials = 0;
  std::size_t blocks = 0;
  double p = 0.0;
  double n = 0.0;
  double same_mean = 0.0;
  double same_variance = 0.0;
  double reference_mean = 0.0;
  double reference_variance = 0.0;
  double mean_error = 0.0;      // relative
  double variance_error = 0.0;  // relative
  double shift_mean = 0.0;
  double reference_shift = 0.0;
  double shift_error = 0.0;     // relative
  bool mean_ok = false;
  bool variance_ok = false;
  bool shift_ok = false;

  bool passed() const noexcept { return mean_ok && variance_ok; }
};

AsymptoticsReport validate_asymptotics(const SynthSpec& spec, std::size_t trials,
                                       const AsymptoticsTolerance& tolerance = {});

}  // namespace mldem
