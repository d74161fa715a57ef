#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mldem/image.hpp"

namespace mldem {

/// Absolute tolerance on the unit-sum property of every histogram.
inline constexpr double kHistogramSumTolerance = 1e-9;

/// Throws std::invalid_argument unless `bins` is non-negative and sums to 1.
void validate_histogram(std::span<const double> bins);

/// N-bin probability distribution over gradient orientations.
class Histogram {
 public:
  explicit Histogram(std::vector<double> bins);

  std::span<const double> bins() const noexcept { return bins_; }
  std::size_t size() const noexcept { return bins_.size(); }
  double operator[](std::size_t i) const noexcept { return bins_[i]; }

  bool operator==(const Histogram&) const = default;

 private:
  std::vector<double> bins_;
};

/// S1 x S2 grid of N-bin histograms plus the number of pixels (samples)
/// that contributed to each block. Blocks are stored row-major.
class GridDescriptor {
 public:
  GridDescriptor(int label, std::size_t rows, std::size_t cols, std::size_t bins,
                 std::vector<double> values, std::vector<std::uint64_t> block_counts);

  int label() const noexcept { return label_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t blocks() const noexcept { return rows_ * cols_; }

  std::span<const double> block(std::size_t k) const noexcept {
    return std::span<const double>(values_).subspan(k * bins_, bins_);
  }
  std::span<const double> block(std::size_t row, std::size_t col) const noexcept {
    return block(row * cols_ + col);
  }
  std::span<const double> values() const noexcept { return values_; }

  std::uint64_t block_count(std::size_t k) const noexcept { return block_counts_[k]; }
  std::span<const std::uint64_t> block_counts() const noexcept { return block_counts_; }
  std::uint64_t total_count() const noexcept { return total_count_; }

  bool same_shape(const GridDescriptor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ && bins_ == other.bins_;
  }

  bool operator==(const GridDescriptor&) const = default;

 private:
  int label_;
  std::size_t rows_;
  std::size_t cols_;
  std::size_t bins_;
  std::vector<double> values_;
  std::vector<std::uint64_t> block_counts_;
  std::uint64_t total_count_;
};

/// Circulant Gaussian (Parzen) kernel over orientation bins. Column-stochastic,
/// so smoothing keeps histograms normalized.
class SmoothingKernel {
 public:
  SmoothingKernel(std::size_t size, double sigma, std::vector<double> weights);

  std::size_t size() const noexcept { return size_; }
  double sigma() const noexcept { return sigma_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return weights_[i * size_ + j]; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  std::size_t size_;
  double sigma_;
  std::vector<double> weights_;  // row-major size x size
};

SmoothingKernel build_smoothing_kernel(std::size_t bins, double sigma);

/// out[i] = sum_j K(i, j) * h[j]. Throws std::invalid_argument on size mismatch.
std::vector<double> smooth(std::span<const double> h, const SmoothingKernel& kernel);
Histogram smooth(const Histogram& h, const SmoothingKernel& kernel);

struct HogParams {
  std::size_t rows = 10;
  std::size_t cols = 10;
  bool weighted = true;  // accumulate gradient magnitude instead of 1 per pixel
};

/// Grid-of-HOG descriptor. The histogram size comes from the kernel.
/// Throws std::invalid_argument("grid too fine") when a block would be empty.
GridDescriptor extract_descriptor(const GrayImage& img, const HogParams& params,
                                  const SmoothingKernel& kernel, int label = 0);

}  // namespace mldem
