#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mldem/synth.hpp"

using namespace mldem;

TEST_CASE("generator shape and determinism") {
  SynthSpec spec;
  spec.classes = 7;
  spec.rows = 2;
  spec.cols = 4;
  spec.bins = 6;
  spec.samples_per_block = 50;
  spec.queries_per_class = 3;
  spec.seed = 11;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  REQUIRE(a.models.size() == 7);
  REQUIRE(a.queries.size() == 21);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(a.models[i] == b.models[i]);
    CHECK(a.models[i].label() == static_cast<int>(i));
    CHECK(a.models[i].total_count() == 8 * 50);
    for (std::size_t q = 0; q < 3; ++q) CHECK(a.queries[i * 3 + q].label() == static_cast<int>(i));
    for (double v : a.models[i].values()) {
      // normalized counts out of 50
      CHECK(std::abs(v * 50 - std::round(v * 50)) < 1e-9);
    }
  }
  spec.seed = 12;
  CHECK_FALSE(generate_synthetic(spec).models[0] == a.models[0]);

  spec.sigma = 0.8;
  const auto smooth = generate_synthetic(spec);
  CHECK(smooth.models.size() == 7);

  spec.classes = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("multinomial and Dirichlet samplers") {
  std::mt19937_64 rng(5);
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  std::vector<double> mean(4, 0.0);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto c = sample_multinomial(100, probs, rng);
    CHECK(std::accumulate(c.begin(), c.end(), std::uint64_t{0}) == 100);
    for (int i = 0; i < 4; ++i) mean[i] += static_cast<double>(c[i]) / reps;
  }
  // standard error of each mean is below 0.1
  for (int i = 0; i < 4; ++i) CHECK(mean[i] == doctest::Approx(100 * probs[i]).epsilon(0.02));

  std::vector<double> dmean(5, 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto d = sample_dirichlet(5, 2.0, rng);
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) dmean[i] += d[i] / reps;
  }
  for (double m : dmean) CHECK(m == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("large-sample law of the grid distance") {
  SynthSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.bins = 8;
  spec.samples_per_block = 1000;
  spec.dirichlet_alpha = 5.0;
  spec.seed = 21;
  const auto rep = validate_asymptotics(spec, 1500);
  CHECK(rep.reference_mean == 28.0);
  CHECK(rep.reference_variance == 56.0);
  CHECK(rep.reference_shift == doctest::Approx(7.0 / 2000.0));
  CHECK(rep.mean_error < 0.05);
  CHECK(rep.variance_error < 0.2);
  CHECK(rep.passed());
  CHECK_THROWS_AS(validate_asymptotics(spec, 1), std::invalid_argument);
}

TEST_CASE("moments approach the reference as blocks get more samples") {
  std::vector<double> mean_error;
  for (std::size_t n : {100, 1000, 10000}) {
    SynthSpec spec;
    spec.rows = spec.cols = 2;
    spec.samples_per_block = n;
    spec.seed = 4;
    const auto rep = validate_asymptotics(spec, 40000);
    CHECK(rep.passed());
    mean_error.push_back(rep.mean_error);
  }
  // Monte-Carlo error of the mean is about 0.15% here; the small-sample bias is several times larger.
  CHECK(mean_error[0] > mean_error[1]);
  CHECK(mean_error[0] > mean_error[2]);
}
