#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace mldem {

/// 8-bit grayscale image stored row-major. Holds an already cropped face
/// region; detection happens upstream.
class GrayImage {
 public:
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  std::uint8_t at(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

/// Per-pixel gradient field. Border pixels carry magnitude 0.
struct GradientField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> magnitude;
  std::vector<double> orientation;  // radians in [0, 2*pi)
};

/// 3x3 median with edge replication at the borders.
GrayImage median_filter(const GrayImage& img);

/// Central differences at interior pixels.
GradientField compute_gradients(const GrayImage& img);

/// Binary PGM (P5), maxval <= 255.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace mldem
