#include <cmath>

#include <doctest.h>

#include "angpool/combine.hpp"
#include "angpool/error.hpp"
#include "angpool/ingest.hpp"
#include "angpool/math.hpp"
#include "angpool/scoring.hpp"

using namespace angpool;

namespace {

PiecewiseLinearCdf uniform(double lo, double hi) {
  return PiecewiseLinearCdf({{lo, 0.0}, {hi, 1.0}});
}

}  // namespace

TEST_CASE("quantile score hand values") {
  CHECK(quantile_score(0.3, 7.0, 7.0) == 0.0);
  CHECK(quantile_score(0.9, 10.0, 12.0) == doctest::Approx(3.6));
  CHECK(quantile_score(0.9, 10.0, 8.0) == doctest::Approx(0.4));
  CHECK(quantile_score(0.5, 1.0, 3.0) >= 0.0);
  CHECK_THROWS_AS(quantile_score(0.0, 1.0, 2.0), Error);
}

TEST_CASE("mqs hand values and translation invariance") {
  // All 23 quantiles at the observation: a jump covering the level range.
  const double x = 4.0;
  const PiecewiseLinearCdf spike({{x - 1.0, 0.0}, {x, 0.005}, {x, 0.995}, {x + 1.0, 1.0}});
  CHECK(mqs(spike, x, hub_levels()) == doctest::Approx(0.0));

  const std::vector<double> levels = {0.25, 0.5, 0.75};
  CHECK(mqs(uniform(0, 1), 0.5, levels) == doctest::Approx(1.0 / 12.0));

  const auto cdf = cdf_from_quantiles(gaussian_quantile_forecast(1.0, 0.5));
  const double base = mqs(cdf, 1.3, hub_levels());
  std::vector<Knot> shifted_knots = cdf.knots();
  for (auto& k : shifted_knots) k.x += 10.0;
  const PiecewiseLinearCdf shifted(std::move(shifted_knots));
  CHECK(mqs(shifted, 11.3, hub_levels()) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("interval score hand values") {
  CHECK(interval_score(0.05, 1.0, 3.0, 2.0) == doctest::Approx(2.0));
  CHECK(interval_score(0.05, 1.0, 3.0, 4.0) == doctest::Approx(42.0));
  CHECK(interval_score(0.5, 1.0, 3.0, 0.0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(interval_score(0.05, 3.0, 1.0, 2.0), Error);
}

TEST_CASE("crps closed form on hand integrals") {
  const PiecewiseLinearCdf point({{5.0, 0.0}, {5.0, 1.0}});
  CHECK(crps(point, 5.0) == doctest::Approx(0.0));
  CHECK(crps(uniform(0, 1), 0.0) == doctest::Approx(1.0 / 3.0));
  CHECK(crps(uniform(0, 1), 0.5) == doctest::Approx(1.0 / 12.0));
  // Observation outside the support adds the excursion length.
  CHECK(crps(uniform(0, 1), -1.0) == doctest::Approx(1.0 + 1.0 / 3.0));
}

TEST_CASE("skill score: identities and pairwise exclusion") {
  const std::vector<double> same = {3.0, 4.0, 5.0};
  CHECK(skill_score(same, same) == doctest::Approx(0.0));

  const std::vector<double> method = {0.9, 1.8, 2.7};
  const std::vector<double> benchmark = {1.0, 2.0, 3.0};
  CHECK(skill_score(method, benchmark) == doctest::Approx(10.0));

  const std::vector<double> swing_m = {0.5, 2.0};
  const std::vector<double> swing_b = {1.0, 1.0};
  CHECK(skill_score(swing_m, swing_b) == doctest::Approx(0.0));

  std::size_t excluded = 0;
  const std::vector<double> with_zero_b = {1.0, 2.0};
  const std::vector<double> zero_b = {1.0, 0.0};
  CHECK(skill_score(with_zero_b, zero_b, &excluded) == doctest::Approx(0.0));
  CHECK(excluded == 1);

  const std::vector<double> negative = {-1.0, 2.0};
  CHECK_THROWS_AS(skill_score(negative, benchmark), Error);
}

TEST_CASE("reliability data boundary conventions") {
  std::vector<PiecewiseLinearCdf> cdfs;
  std::vector<double> observations;
  for (int i = 0; i < 10; ++i) {
    cdfs.push_back(uniform(i, i + 2.0));
    observations.push_back(i + 1.0);  // each forecast's own median
  }
  const std::vector<double> median_level = {0.5};
  const auto table = reliability_data(cdfs, observations, median_level);
  CHECK(table[0].second == doctest::Approx(1.0));  // equality counts

  std::vector<double> above(observations.size(), 100.0);
  for (const auto& [level, fraction] : reliability_data(cdfs, above, hub_levels())) {
    CHECK(fraction == 0.0);
  }
}

TEST_CASE("reliability of a calibrated stream stays in the binomial band") {
  Rng rng(41);
  const auto cdf = cdf_from_quantiles(gaussian_quantile_forecast(0.0, 1.0));
  const int n = 20000;
  std::vector<PiecewiseLinearCdf> cdfs(static_cast<std::size_t>(n), cdf);
  std::vector<double> observations;
  observations.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) observations.push_back(cdf.inverse(rng.uniform()));
  for (const auto& [level, fraction] : reliability_data(cdfs, observations, hub_levels())) {
    CHECK(std::fabs(fraction - level) <= 3.0 * std::sqrt(level * (1.0 - level) / n));
  }
  CHECK(interval_coverage(cdfs, observations, 0.5) ==
        doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("interval coverage extremes") {
  std::vector<PiecewiseLinearCdf> cdfs = {uniform(0, 2), uniform(1, 3)};
  const std::vector<double> medians = {1.0, 2.0};
  CHECK(interval_coverage(cdfs, medians, 0.05) == doctest::Approx(1.0));
  const std::vector<double> outside = {10.0, 10.0};
  CHECK(interval_coverage(cdfs, outside, 0.05) == doctest::Approx(0.0));
}

TEST_CASE("MQS over a dense level grid approximates the CRPS") {
  std::vector<double> dense;
  for (int i = 1; i <= 999; ++i) dense.push_back(i / 1000.0);
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cdf = cdf_from_quantiles(
        gaussian_quantile_forecast(rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.0)));
    const double z =
        rng.uniform(cdf.support_lo() - 0.2, cdf.support_hi() + 0.2);
    const double dense_mqs = mqs(cdf, z, dense);
    const double exact = crps(cdf, z);
    CHECK(std::fabs(dense_mqs - exact) / exact <= 0.01);
  }
}

TEST_CASE("MQS decomposes into weighted interval scores plus the median term") {
  Rng rng(47);
  const auto& levels = hub_levels();
  for (int trial = 0; trial < 50; ++trial) {
    const auto cdf = cdf_from_quantiles(
        gaussian_quantile_forecast(rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.0)));
    const double z = rng.uniform(cdf.support_lo() - 0.3, cdf.support_hi() + 0.3);
    const double total = mqs(cdf, z, levels) * static_cast<double>(levels.size());
    double recomposed = std::fabs(z - cdf.inverse(0.5));
    for (std::size_t i = 0; i < 11; ++i) {  // the 11 symmetric level pairs
      const double alpha = levels[i];
      const double l = cdf.inverse(alpha);
      const double u = cdf.inverse(1.0 - alpha);
      recomposed += 2.0 * alpha * interval_score(2.0 * alpha, l, u, z);
    }
    CHECK(std::fabs(total - recomposed) <= 1e-9);
  }
}

TEST_CASE("the generating CDF minimizes expected MQS (propriety smoke test)") {
  Rng rng(53);
  const auto truth = cdf_from_quantiles(gaussian_quantile_forecast(0.0, 1.0));
  const auto shifted = cdf_from_quantiles(gaussian_quantile_forecast(0.4, 1.0));
  const auto narrow = cdf_from_quantiles(gaussian_quantile_forecast(0.0, 0.5));
  const int n = 100000;
  double own = 0.0, shifted_sum = 0.0, narrow_sum = 0.0, own_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = truth.inverse(rng.uniform());
    const double s = mqs(truth, z, hub_levels());
    own += s;
    own_sq += s * s;
    shifted_sum += mqs(shifted, z, hub_levels());
    narrow_sum += mqs(narrow, z, hub_levels());
  }
  const double mean_own = own / n;
  const double se = std::sqrt((own_sq / n - mean_own * mean_own) / n);
  CHECK(mean_own <= shifted_sum / n + 3.0 * se);
  CHECK(mean_own <= narrow_sum / n + 3.0 * se);
}

TEST_CASE("CRPS bound for pooled forecasts (theorem smoke test)") {
  Rng rng(59);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PiecewiseLinearCdf> cdfs;
    for (int i = 0; i < 3; ++i) {
      cdfs.push_back(cdf_from_quantiles(
          gaussian_quantile_forecast(rng.uniform(-0.5, 0.5), rng.uniform(0.3, 0.8))));
    }
    const double z = rng.uniform(-1.5, 1.5);
    double average = 0.0;
    for (const auto& cdf : cdfs) average += crps(cdf, z) / 3.0;
    CHECK(crps(vertical_combine(cdfs, Aggregator::mean()), z) <= average + 1e-9);
    CHECK(crps(horizontal_combine(cdfs, Aggregator::mean()), z) <= average + 1e-9);
    CHECK(crps(angular_combine_exact(cdfs, 45.0), z) <= average + 1e-9);
  }
}
