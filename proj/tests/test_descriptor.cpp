#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mldem/descriptor.hpp"
#include "test_util.hpp"

using namespace mldem;

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

GrayImage ramp(std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> px(w * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) px[y * w + x] = static_cast<std::uint8_t>(x);
  return GrayImage(w, h, std::move(px));
}

}  // namespace

TEST_CASE("Histogram validation") {
  CHECK_NOTHROW(Histogram({0.25, 0.75}));
  CHECK_THROWS_AS(Histogram({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(Histogram({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(Histogram(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("GridDescriptor invariants") {
  CHECK_THROWS_AS(GridDescriptor(0, 2, 2, 2, std::vector<double>(7, 0.5), {1, 1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(GridDescriptor(0, 1, 1, 2, {0.5, 0.5}, {1, 1}), std::invalid_argument);
  const GridDescriptor d(3, 1, 2, 2, {0.5, 0.5, 1.0, 0.0}, {4, 6});
  CHECK(d.total_count() == 10);
  CHECK(d.block(0, 1)[0] == 1.0);
}

TEST_CASE("build_smoothing_kernel") {
  SUBCASE("sigma 0 is the identity") {
    const auto k = build_smoothing_kernel(5, 0.0);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(k(i, j) == (i == j ? 1.0 : 0.0));
  }
  SUBCASE("N=2, sigma=1") {
    // e^0 / (1 + e^-1/2) and e^-1/2 / (1 + e^-1/2)
    const auto k = build_smoothing_kernel(2, 1.0);
    CHECK(k(0, 0) == doctest::Approx(0.6224593312018546).epsilon(1e-12));
    CHECK(k(1, 0) == doctest::Approx(0.3775406687981454).epsilon(1e-12));
    CHECK(k(0, 1) == doctest::Approx(0.3775406687981454).epsilon(1e-12));
    CHECK(k(1, 1) == doctest::Approx(0.6224593312018546).epsilon(1e-12));
  }
  SUBCASE("columns sum to 1 and depend only on circular distance") {
    for (std::size_t n : {1u, 3u, 8u, 9u, 16u}) {
      for (double sigma : {0.3, 1.0, 2.5}) {
        const auto k = build_smoothing_kernel(n, sigma);
        for (std::size_t j = 0; j < n; ++j) {
          double col = 0.0;
          for (std::size_t i = 0; i < n; ++i) col += k(i, j);
          CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t d = std::min((i + n - j) % n, (j + n - i) % n);
            CHECK(k(i, j) == doctest::Approx(k(d, 0)).epsilon(1e-14));
          }
        }
      }
    }
  }
}

TEST_CASE("smooth") {
  const auto k2 = build_smoothing_kernel(2, 1.0);
  SUBCASE("identity kernel leaves h unchanged") {
    const Histogram h({0.1, 0.2, 0.7});
    CHECK(smooth(h, build_smoothing_kernel(3, 0.0)) == h);
  }
  SUBCASE("uniform stays uniform") {
    const auto out = smooth(std::vector<double>(8, 0.125), build_smoothing_kernel(8, 1.3));
    for (double v : out) CHECK(v == doctest::Approx(0.125).epsilon(1e-14));
  }
  SUBCASE("one-hot with N=2 sigma=1") {
    const auto out = smooth(std::vector<double>{1.0, 0.0}, k2);
    CHECK(out[0] == doctest::Approx(0.6224593312018546).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.3775406687981454).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(smooth(std::vector<double>{0.5, 0.25, 0.25}, k2), std::invalid_argument); }
  SUBCASE("linear, normalized and strictly positive for sigma > 0") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto k = build_smoothing_kernel(8, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const auto h1 = testing::random_histogram(8, rng, 0.5);
      const auto h2 = testing::random_histogram(8, rng, 0.5);
      const double a = u(rng);
      std::vector<double> mix(8);
      for (int i = 0; i < 8; ++i) mix[i] = a * h1[i] + (1 - a) * h2[i];
      const auto s1 = smooth(h1, k);
      const auto s2 = smooth(h2, k);
      const auto sm = smooth(mix, k);
      for (int i = 0; i < 8; ++i) {
        CHECK(sm[i] == doctest::Approx(a * s1[i] + (1 - a) * s2[i]).epsilon(1e-9));
        CHECK(sm[i] > 0.0);
      }
      CHECK(sum(sm) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("extract_descriptor") {
  const auto identity8 = build_smoothing_kernel(8, 0.0);
  SUBCASE("constant image gives uniform blocks") {
    const GrayImage img(20, 20, std::vector<std::uint8_t>(400, 90));
    const auto d = extract_descriptor(img, {4, 5, true}, build_smoothing_kernel(8, 1.0));
    CHECK(d.total_count() == 0);
    for (double v : d.values()) CHECK(v == doctest::Approx(0.125).epsilon(1e-14));
  }
  SUBCASE("horizontal ramp is one-hot at bin 0") {
    const auto d = extract_descriptor(ramp(12, 12), {2, 2, true}, identity8, 4);
    CHECK(d.label() == 4);
    for (std::size_t k = 0; k < d.blocks(); ++k) {
      CHECK(d.block(k)[0] == 1.0);
      CHECK(sum(d.block(k)) == 1.0);
      CHECK(d.block_count(k) == 25);  // 5x5 interior pixels per 6x6 block
    }
    CHECK(d.total_count() == 100);
  }
  SUBCASE("unweighted accumulation also one-hot") {
    const auto d = extract_descriptor(ramp(12, 12), {3, 3, false}, identity8);
    for (std::size_t k = 0; k < d.blocks(); ++k) CHECK(d.block(k)[0] == 1.0);
  }
  SUBCASE("grid too fine") {
    CHECK_THROWS_WITH_AS(extract_descriptor(ramp(5, 5), {6, 2, true}, identity8), "grid too fine",
                         std::invalid_argument);
  }
  SUBCASE("random images: normalized, non-negative, deterministic") {
    std::mt19937_64 rng(8);
    const auto kernel = build_smoothing_kernel(8, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const auto img = testing::random_image(33, 41, rng);
      const auto a = extract_descriptor(img, {10, 10, trial % 2 == 0}, kernel);
      const auto b = extract_descriptor(img, {10, 10, trial % 2 == 0}, kernel);
      CHECK(a == b);
      for (std::size_t k = 0; k < a.blocks(); ++k) {
        CHECK(std::abs(sum(a.block(k)) - 1.0) <= 1e-9);
        for (double v : a.block(k)) CHECK(v > 0.0);
      }
    }
  }
}
