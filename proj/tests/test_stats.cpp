#include <doctest.h>

#include <cmath>
#include <limits>

#include "gqmc/noise.hpp"
#include "gqmc/stats.hpp"

using namespace gqmc;

TEST_CASE("weighted mean examples") {
  const std::vector<double> v{1, 2, 3};
  CHECK(weighted_mean(v, std::vector<double>{0, 0, 0}) == doctest::Approx(2.0));
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(weighted_mean(v, std::vector<double>{ninf, 4.0, ninf}) == 2.0);
  CHECK(weighted_mean(v, std::vector<double>{0, std::log(2.0), 0}) == doctest::Approx(2.0));
}

TEST_CASE("weighted mean errors") {
  CHECK_THROWS_AS(weighted_mean(std::vector<double>{}, std::vector<double>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(weighted_mean(std::vector<double>{1.0}, std::vector<double>{0.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("complex weighted mean") {
  const std::vector<std::complex<double>> v{{1, 1}, {3, -1}};
  const auto m = weighted_mean(v, std::vector<double>{0.0, 0.0});
  CHECK(m.real() == doctest::Approx(2.0));
  CHECK(m.imag() == doctest::Approx(0.0));
}

TEST_CASE("shift invariance") {
  const auto values = gaussian_draws(NoiseStream{1, 0, 0, NoiseDomain::auxiliary}, 50, 1.0);
  const auto logw = gaussian_draws(NoiseStream{1, 1, 0, NoiseDomain::auxiliary}, 50, 4.0);
  const double base = weighted_mean(values, logw);
  for (int k = 0; k < 10; ++k) {
    const double shift = 200.0 * uniform_draw(NoiseStream{1, 2, 0, NoiseDomain::auxiliary},
                                              static_cast<std::uint32_t>(k)) - 100.0;
    std::vector<double> shifted = logw;
    for (auto& l : shifted) l += shift;
    CHECK(weighted_mean(values, shifted) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("batch error examples") {
  const std::vector<double> same(100, 3.0), flat(100, 0.0);
  CHECK(batch_error(same, flat, 20).value() == 0.0);
  CHECK_FALSE(batch_error(same, flat, 1).has_value());
  CHECK_THROWS(batch_error(std::vector<double>(5, 1.0), std::vector<double>(5, 0.0), 10));

  const auto normals = gaussian_draws(NoiseStream{9, 0, 0, NoiseDomain::auxiliary}, 10000, 1.0);
  const std::vector<double> w(10000, 0.0);
  const double se = batch_error(normals, w, 20).value();
  CHECK(se == doctest::Approx(0.01).epsilon(0.3));
}

TEST_CASE("batch error halves when the sample quadruples") {
  // Averaged over repeats so the comparison is not dominated by estimator noise.
  double small = 0.0, large = 0.0;
  const int repeats = 40;
  for (int r = 0; r < repeats; ++r) {
    const auto a = gaussian_draws(NoiseStream{10, static_cast<std::uint64_t>(r), 0,
                                              NoiseDomain::auxiliary}, 2000, 1.0);
    const auto b = gaussian_draws(NoiseStream{10, static_cast<std::uint64_t>(r), 1,
                                              NoiseDomain::auxiliary}, 8000, 1.0);
    small += batch_error(a, std::vector<double>(a.size(), 0.0), 20).value();
    large += batch_error(b, std::vector<double>(b.size(), 0.0), 20).value();
  }
  // Relative noise of one SE estimate with B=20 is about 1/sqrt(2*19).
  const double ratio = large / small;
  const double tolerance = 3.0 * std::sqrt(2.0 / (2.0 * 19.0 * repeats)) * 0.5;
  CHECK(std::abs(ratio - 0.5) < tolerance);
}

TEST_CASE("batch error ignores relabeling inside batches") {
  const auto v = gaussian_draws(NoiseStream{12, 0, 0, NoiseDomain::auxiliary}, 100, 1.0);
  std::vector<double> w(100, 0.0);
  auto permuted = v;
  for (int b = 0; b < 10; ++b) std::reverse(permuted.begin() + 10 * b, permuted.begin() + 10 * b + 10);
  CHECK(batch_error(v, w, 10).value() == doctest::Approx(batch_error(permuted, w, 10).value()));
}

TEST_CASE("batch ranges tile the index set") {
  std::size_t next = 0;
  for (int b = 0; b < 7; ++b) {
    const auto [lo, hi] = batch_range(100, 7, b);
    CHECK(lo == next);
    CHECK(hi > lo);
    next = hi;
  }
  CHECK(next == 100);
}

TEST_CASE("batched estimate of a constant has zero error") {
  const auto est = batched_estimate(40, 20, [](std::size_t, std::size_t) { return 2.5; });
  CHECK(est.value == 2.5);
  CHECK(est.error.value() == 0.0);
  const auto single = batched_estimate(40, 1, [](std::size_t, std::size_t) { return 2.5; });
  CHECK_FALSE(single.error.has_value());
}
