#include <cmath>
#include <functional>
#include <vector>
#include <doctest.h>

#include "spiband/estimators.hpp"
#include "tests/oracles.hpp"
#include "tests/properties.hpp"
#include "tests/testutil.hpp"

using spiband::Alpha;
using spiband::Band;
using spiband::Error;
using spiband::ErrorKind;
using spiband::GspieConfig;
using spiband::OlshenConfig;
using spiband::SampleMatrix;
using spiband::WallSide;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a spiband::Error");
  return ErrorKind::IoError;
}

SampleMatrix deciles() {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({i / 10.0});
  return testutil::matrix_of(rows);
}

OlshenConfig no_resample(double alpha) {
  OlshenConfig cfg;
  cfg.alpha = Alpha(alpha);
  cfg.resample = false;
  return cfg;
}

}  // namespace

TEST_CASE("column statistics on the decile sample") {
  const auto stats = spiband::column_stats(deciles());
  REQUIRE(stats.mu.size() == 1);
  CHECK(stats.mu[0] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(stats.sigma[0] == doctest::Approx(std::sqrt(0.0825)).epsilon(1e-15));
}

TEST_CASE("olshen without resampling reproduces the decile band") {
  const Band band = spiband::olshen(deciles(), no_resample(0.2));
  CHECK(band.lower(0) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(band.upper(0) == doctest::Approx(0.80).epsilon(1e-12));
  const SampleMatrix data = deciles();
  std::size_t covered = 0;
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    if (spiband::contains(band, data.row(i))) ++covered;
  }
  CHECK(covered == 8);
}

TEST_CASE("two-sided olshen collapses onto a point mass at the median") {
  const SampleMatrix samples = testutil::matrix_of({{0.0}, {0.0}, {0.0}, {1.0}});
  const Band band = spiband::two_sided_olshen(samples, no_resample(0.25));
  CHECK(band.lower(0) == 0.0);
  CHECK(band.upper(0) == 0.0);
}

TEST_CASE("two-sided olshen matches olshen on median-symmetric data") {
  // Dyadic values symmetric about 0.5: mean == median and the one-sided RMS
  // gaps equal the overall sigma, so every intermediate double coincides.
  const SampleMatrix samples =
      testutil::matrix_of({{0.25}, {0.375}, {0.625}, {0.75}});
  const Band sym = spiband::olshen(samples, no_resample(0.25));
  const Band two = spiband::two_sided_olshen(samples, no_resample(0.25));
  CHECK(testutil::bands_bit_equal(sym, two));
}

TEST_CASE("two-sided statistics use the even-m midpoint median") {
  const SampleMatrix samples = testutil::matrix_of({{0.2}, {0.4}, {0.6}, {0.8}});
  const auto stats = spiband::two_sided_stats(samples);
  CHECK(stats.med[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(stats.sigma_minus[0] == doctest::Approx(std::sqrt(0.05)).epsilon(1e-12));
  CHECK(stats.sigma_plus[0] == doctest::Approx(std::sqrt(0.05)).epsilon(1e-12));
}

TEST_CASE("gspie on the five-point line stops at the documented band") {
  const SampleMatrix samples =
      testutil::matrix_of({{0.0}, {0.1}, {0.5}, {0.9}, {1.0}});
  const Band band = spiband::gspie_from_partitions(samples, samples, Alpha(0.2));
  CHECK(band.lower(0) == 0.1);
  CHECK(band.upper(0) == 1.0);

  const auto trace = spiband::detail::gspie_trace(samples, samples, Alpha(0.2));
  REQUIRE(trace.steps.size() == 2);
  CHECK(trace.steps[0].applied);
  CHECK(trace.steps[0].retraction.side == WallSide::lower);
  CHECK(trace.steps[0].retraction.new_value == 0.1);
  CHECK(trace.steps[0].retraction.excluded_count == 1);
  CHECK(trace.steps[0].validation_coverage_after == 0.8);
  CHECK_FALSE(trace.steps[1].applied);
  CHECK(trace.steps[1].retraction.new_value == 0.5);
}

TEST_CASE("a tiny miscoverage level freezes gspie at the bounding box") {
  const SampleMatrix samples =
      testutil::matrix_of({{0.0}, {0.1}, {0.5}, {0.9}, {1.0}});
  const Band band = spiband::gspie_from_partitions(samples, samples, Alpha(1e-9));
  CHECK(band.lower(0) == 0.0);
  CHECK(band.upper(0) == 1.0);
}

TEST_CASE("identical rows give degenerate point bands everywhere") {
  const SampleMatrix samples =
      testutil::matrix_of({{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}});
  const Band o = spiband::olshen(samples, no_resample(0.1));
  const Band t = spiband::two_sided_olshen(samples, no_resample(0.1));
  const Band g = spiband::gspie(samples, GspieConfig{Alpha(0.1), 0.5, 3});
  const Band b = spiband::bonferroni_band(samples, Alpha(0.1));
  for (const Band* band : {&o, &t, &g, &b}) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(band->lower(k) == 0.3);
      CHECK(band->upper(k) == 0.3);
    }
  }
}

TEST_CASE("gspie_step handles degenerate and free retractions") {
  const spiband::TimeGrid grid({1.0});
  const SampleMatrix point = testutil::matrix_of({{0.5}});
  CHECK_FALSE(spiband::gspie_step(Band(grid, {0.5}, {0.5}), point).has_value());

  const auto free_step = spiband::gspie_step(Band(grid, {0.0}, {1.0}), point);
  REQUIRE(free_step.has_value());
  CHECK(free_step->side == WallSide::lower);  // +inf tie broken lower-first
  CHECK(free_step->new_value == 0.5);
  CHECK(free_step->excluded_count == 0);
  CHECK(std::isinf(free_step->score));

  const SampleMatrix pair = testutil::matrix_of({{0.2}, {0.8}});
  const auto step = spiband::gspie_step(Band(grid, {0.0}, {1.0}), pair);
  REQUIRE(step.has_value());
  CHECK(step->side == WallSide::lower);
  CHECK(step->new_value == 0.2);
  CHECK(step->width_reduction == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(step->excluded_count == 0);
}

TEST_CASE("apply_retraction moves exactly one wall") {
  const spiband::TimeGrid grid({1.0, 2.0});
  const Band band(grid, {0.1, 0.0}, {0.9, 0.8});
  spiband::WallRetraction r;
  r.time_index = 1;
  r.side = WallSide::upper;
  r.new_value = 0.6;
  const Band moved = spiband::apply_retraction(band, r);
  CHECK(moved.upper(1) == 0.6);
  CHECK(moved.upper(0) == 0.9);
  CHECK(moved.lower(0) == 0.1);
  CHECK(moved.lower(1) == 0.0);
}

TEST_CASE("gspie partitions split deterministically and exhaustively") {
  spiband::rng::Stream s(77);
  const SampleMatrix samples = testutil::random_matrix(s, 9, 3);
  const GspieConfig cfg{Alpha(0.1), 0.5, 123};
  const auto p1 = spiband::gspie_partitions(samples, cfg);
  const auto p2 = spiband::gspie_partitions(samples, cfg);
  CHECK(testutil::bit_equal(p1.optimization.data(), p2.optimization.data()));
  CHECK(testutil::bit_equal(p1.validation.data(), p2.validation.data()));
  CHECK(p1.optimization.row_count() == 5);  // round(0.5 * 9)
  CHECK(p1.optimization.row_count() + p1.validation.row_count() == 9);

  // Every input row appears exactly once across the two sides.
  std::vector<std::vector<double>> seen;
  for (std::size_t i = 0; i < p1.optimization.row_count(); ++i) {
    seen.emplace_back(p1.optimization.row(i).begin(), p1.optimization.row(i).end());
  }
  for (std::size_t i = 0; i < p1.validation.row_count(); ++i) {
    seen.emplace_back(p1.validation.row(i).begin(), p1.validation.row(i).end());
  }
  std::size_t matched = 0;
  std::vector<bool> used(seen.size(), false);
  for (std::size_t i = 0; i < samples.row_count(); ++i) {
    const auto row = samples.row(i);
    for (std::size_t j = 0; j < seen.size(); ++j) {
      if (!used[j] && std::equal(row.begin(), row.end(), seen[j].begin())) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  CHECK(matched == samples.row_count());
}

TEST_CASE("ogive quantile interpolates between order-statistic nodes") {
  const std::vector<double> sorted = {0.0, 0.25, 0.5, 0.75, 1.0};
  CHECK(spiband::ogive_quantile(sorted, 0.25) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(spiband::ogive_quantile(sorted, 0.05) == 0.0);
  CHECK(spiband::ogive_quantile(sorted, 0.5) == 0.5);
  CHECK(spiband::ogive_quantile(sorted, 0.99) == 1.0);
  CHECK(spiband::ogive_quantile(std::vector<double>{0.4}, 0.7) == 0.4);
  CHECK(kind_of([] {
          spiband::ogive_quantile(std::vector<double>{}, 0.5);
        }) == ErrorKind::EmptyInput);
  CHECK(kind_of([&] { spiband::ogive_quantile(sorted, -0.01); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([&] { spiband::ogive_quantile(sorted, 1.01); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("bonferroni with one time point spans the extreme quantiles") {
  const SampleMatrix samples =
      testutil::matrix_of({{0.0}, {0.25}, {0.5}, {0.75}, {1.0}});
  const Band band = spiband::bonferroni_band(samples, Alpha(1.0 / 3.0));
  CHECK(band.lower(0) == 0.0);
  CHECK(band.upper(0) == 1.0);
}

TEST_CASE("critical k picks the documented order statistic") {
  const std::vector<double> pooled = {4.0, 1.0, 3.0, 2.0};
  CHECK(spiband::critical_k(pooled, Alpha(0.25)).value == 3.0);
  CHECK(spiband::critical_k(pooled, Alpha(0.5)).value == 2.0);
  CHECK(spiband::critical_k(pooled, Alpha(1e-12)).value == 4.0);
  CHECK(spiband::critical_k(pooled, Alpha(0.999)).value == 1.0);
  const std::vector<double> equal = {2.0, 2.0, 2.0};
  CHECK(spiband::critical_k(equal, Alpha(0.4)).value == 2.0);
  CHECK(kind_of([] {
          spiband::critical_k(std::vector<double>{}, Alpha(0.5));
        }) == ErrorKind::EmptyInput);
}

TEST_CASE("estimator preconditions raise typed errors") {
  const SampleMatrix one = testutil::matrix_of({{0.5, 0.4}});
  CHECK(kind_of([&] { spiband::olshen(one, no_resample(0.1)); }) == ErrorKind::TooFewSamples);
  CHECK(kind_of([&] {
          spiband::two_sided_olshen(one, no_resample(0.1));
        }) == ErrorKind::TooFewSamples);
  const SampleMatrix three = testutil::matrix_of({{0.5}, {0.4}, {0.3}});
  CHECK(kind_of([&] {
          spiband::gspie(three, GspieConfig{Alpha(0.1), 0.5, 0});
        }) == ErrorKind::TooFewSamples);
  const SampleMatrix four = testutil::matrix_of({{0.5}, {0.4}, {0.3}, {0.2}});
  CHECK(kind_of([&] {
          spiband::gspie(four, GspieConfig{Alpha(0.1), 0.0, 0});
        }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([&] {
          spiband::gspie(four, GspieConfig{Alpha(0.1), 1.0, 0});
        }) == ErrorKind::InvalidConfig);
  OlshenConfig bad;
  bad.bootstrap_reps = 0;
  CHECK(kind_of([&] { spiband::olshen(four, bad); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("critical k agrees with the scan reference") {
  const auto r = oracle::critical_k_oracle_suite(120, 60);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("gspie_step agrees with the enumeration reference") {
  const auto r = oracle::gspie_step_oracle_suite(250, 61);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: denominator choice does not move the band") {
  const auto r = props::denominator_invariance(80, 62);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: olshen band is affine-equivariant before clipping") {
  const auto r = props::olshen_affine_equivariance(80, 63, false);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: two-sided band is affine-equivariant before clipping") {
  const auto r = props::olshen_affine_equivariance(80, 64, true);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: gspie is equivariant under common affine maps") {
  const auto r = props::gspie_affine_equivariance(80, 65);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: gspie keeps validation coverage above threshold") {
  const auto r = props::gspie_validation_coverage(80, 66);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: gspie widths shrink and walls anchor on samples") {
  const auto r = props::gspie_width_monotonic(80, 67);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: coverage is monotone in the critical scaling") {
  const auto r = props::coverage_monotone_in_k(80, 68);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: estimators are bitwise deterministic") {
  const auto r = props::determinism(25, 69);
  INFO(r.summary());
  CHECK(r.ok());
}

TEST_CASE("property: batch bands equal their single-level calls") {
  const auto r = props::multialpha_consistency(25, 70);
  INFO(r.summary());
  CHECK(r.ok());
}
