#include "mldem/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mldem {

void validate_histogram(std::span<const double> bins) {
  if (bins.empty()) throw std::invalid_argument("histogram has no bins");
  double sum = 0.0;
  for (double b : bins) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
      throw std::invalid_argument("histogram bin is negative or not finite");
    }
    sum += b;
  }
  if (std::abs(sum - 1.0) > kHistogramSumTolerance) {
    throw std::invalid_argument("histogram does not sum to 1 (sum = " + std::to_string(sum) + ")");
  }
}

Histogram::Histogram(std::vector<double> bins) : bins_(std::move(bins)) { validate_histogram(bins_); }

GridDescriptor::GridDescriptor(int label, std::size_t rows, std::size_t cols, std::size_t bins,
                               std::vector<double> values, std::vector<std::uint64_t> block_counts)
    : label_(label),
      rows_(rows),
      cols_(cols),
      bins_(bins),
      values_(std::move(values)),
      block_counts_(std::move(block_counts)),
      total_count_(0) {
  if (rows_ == 0 || cols_ == 0 || bins_ == 0) {
    throw std::invalid_argument("descriptor dimensions must be positive");
  }
  if (values_.size() != rows_ * cols_ * bins_) {
    throw std::invalid_argument("descriptor values do not match rows*cols*bins");
  }
  if (block_counts_.size() != rows_ * cols_) {
    throw std::invalid_argument("descriptor block counts do not match rows*cols");
  }
  for (std::size_t k = 0; k < blocks(); ++k) validate_histogram(block(k));
  total_count_ = std::accumulate(block_counts_.begin(), block_counts_.end(), std::uint64_t{0});
}

SmoothingKernel::SmoothingKernel(std::size_t size, double sigma, std::vector<double> weights)
    : size_(size), sigma_(sigma), weights_(std::move(weights)) {
  if (size_ == 0 || weights_.size() != size_ * size_) {
    throw std::invalid_argument("kernel weights must be size x size");
  }
}

SmoothingKernel build_smoothing_kernel(std::size_t bins, double sigma) {
  if (bins == 0) throw std::invalid_argument("kernel needs at least one bin");
  if (!(sigma >= 0.0)) throw std::invalid_argument("kernel bandwidth must be non-negative");
  std::vector<double> w(bins * bins, 0.0);
  if (sigma == 0.0) {
    for (std::size_t i = 0; i < bins; ++i) w[i * bins + i] = 1.0;
    return SmoothingKernel(bins, sigma, std::move(w));
  }
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const std::size_t diff = i > j ? i - j : j - i;
      const auto d = static_cast<double>(std::min(diff, bins - diff));
      w[i * bins + j] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
  }
  for (std::size_t j = 0; j < bins; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < bins; ++i) col += w[i * bins + j];
    for (std::size_t i = 0; i < bins; ++i) w[i * bins + j] /= col;
  }
  return SmoothingKernel(bins, sigma, std::move(w));
}

std::vector<double> smooth(std::span<const double> h, const SmoothingKernel& kernel) {
  const std::size_t n = kernel.size();
  if (h.size() != n) {
    throw std::invalid_argument("histogram has " + std::to_string(h.size()) + " bins, kernel expects " +
                                std::to_string(n));
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += kernel(i, j) * h[j];
    out[i] = acc;
  }
  return out;
}

Histogram smooth(const Histogram& h, const SmoothingKernel& kernel) {
  return Histogram(smooth(h.bins(), kernel));
}

GridDescriptor extract_descriptor(const GrayImage& img, const HogParams& params,
                                  const SmoothingKernel& kernel, int label) {
  const std::size_t rows = params.rows;
  const std::size_t cols = params.cols;
  const std::size_t bins = kernel.size();
  if (rows == 0 || cols == 0) throw std::invalid_argument("grid must have at least one block");
  if (rows > img.height() || cols > img.width()) throw std::invalid_argument("grid too fine");

  const GradientField grad = compute_gradients(img);
  const std::size_t blocks = rows * cols;
  std::vector<double> acc(blocks * bins, 0.0);
  std::vector<std::uint64_t> counts(blocks, 0);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t s1 = 0; s1 < rows; ++s1) {
    const std::size_t y0 = s1 * img.height() / rows;
    const std::size_t y1 = (s1 + 1) * img.height() / rows;
    for (std::size_t s2 = 0; s2 < cols; ++s2) {
      const std::size_t x0 = s2 * img.width() / cols;
      const std::size_t x1 = (s2 + 1) * img.width() / cols;
      const std::size_t k = s1 * cols + s2;
      double* hist = acc.data() + k * bins;
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          const std::size_t i = y * img.width() + x;
          const double mag = grad.magnitude[i];
          if (mag <= 0.0) continue;
          auto bin = static_cast<std::size_t>(grad.orientation[i] * static_cast<double>(bins) / two_pi);
          if (bin >= bins) bin = bins - 1;
          hist[bin] += params.weighted ? mag : 1.0;
          ++counts[k];
        }
      }
    }
  }

  std::vector<double> values(blocks * bins);
  for (std::size_t k = 0; k < blocks; ++k) {
    std::span<double> raw(acc.data() + k * bins, bins);
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (total > 0.0) {
      for (double& v : raw) v /= total;
    } else {
      for (double& v : raw) v = 1.0 / static_cast<double>(bins);
    }
    const std::vector<double> smoothed = smooth(raw, kernel);
    std::copy(smoothed.begin(), smoothed.end(), values.begin() + static_cast<std::ptrdiff_t>(k * bins));
  }
  return GridDescriptor(label, rows, cols, bins, std::move(values), std::move(counts));
}

}  // namespace mldem
