// Acceptance runner: executes every acceptance criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exit code is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spiband/curves.hpp"
#include "spiband/estimators.hpp"
#include "spiband/eval.hpp"
#include "spiband/synth.hpp"
#include "tests/oracles.hpp"
#include "tests/properties.hpp"
#include "tests/testutil.hpp"

using spiband::Alpha;
using spiband::AggregateRow;
using spiband::Band;
using spiband::Method;
using spiband::SampleMatrix;

namespace {

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
  explicit Criterion(std::string n) : name(std::move(n)) {}
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// The same synthetic truth the CLI uses by default: Weibull-shaped base
// curve on the integer grid 1..32 with strongly correlated logit noise.
spiband::GeneratorConfig default_latent_truth() {
  const std::size_t n = 32;
  std::vector<double> times(n), base(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = static_cast<double>(i + 1);
    base[i] = std::exp(-std::pow(times[i] / 22.0, 1.4));
  }
  return spiband::LatentGaussianConfig{spiband::TimeGrid(std::move(times)), std::move(base),
                                       0.005, 0.8, 0};
}

const AggregateRow& find_aggregate(const std::vector<AggregateRow>& aggs, Method method,
                                   double alpha, std::size_t grid_size) {
  for (const AggregateRow& a : aggs) {
    if (a.method == method && a.alpha == alpha && a.grid_size == grid_size) return a;
  }
  throw std::logic_error("aggregate row not found");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void report(const Criterion& c, int index) {
  std::printf("[%s] criterion %d: %s%s%s\n", c.pass ? "PASS" : "FAIL", index, c.name.c_str(),
              c.detail.empty() ? "" : " | ", c.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  std::vector<Criterion> results;

  // Criteria 1 and 2 share one calibration run.
  Criterion c1{"calibration coverage of each SPIE within 0.03 of its target"};
  Criterion c2{"bonferroni coverage at most 0.005 below every target"};
  spiband::ExperimentReport calibration;
  double calibration_seconds = 0.0;
  const std::vector<double> alphas = {0.01, 0.05, 0.1, 0.2};
  {
    const auto start = std::chrono::steady_clock::now();
    spiband::CalibrationParams params{
        default_latent_truth(),
        {Method::olshen, Method::olshen2, Method::gspie, Method::bonferroni},
        alphas,
        50,
        1000,
        10000,
        20240817,
        {1000, 0.5, true, true},
        0};
    calibration = spiband::calibration_experiment(params);
    calibration_seconds = seconds_since(start);

    std::ostringstream d1, d2;
    bool ok1 = calibration_seconds < 300.0;
    bool ok2 = true;
    d1 << "runtime " << fmt(calibration_seconds) << "s;";
    for (double alpha : alphas) {
      for (Method m : {Method::olshen, Method::olshen2, Method::gspie}) {
        const AggregateRow& row = find_aggregate(calibration.aggregates, m, alpha, 32);
        const double gap = row.mean_coverage - (1.0 - alpha);
        if (std::abs(gap) > 0.03) ok1 = false;
        d1 << " " << spiband::to_string(m) << "@" << alpha << "=" << fmt(row.mean_coverage);
      }
      const AggregateRow& bon =
          find_aggregate(calibration.aggregates, Method::bonferroni, alpha, 32);
      if (!(bon.mean_coverage >= 1.0 - alpha - 0.005)) ok2 = false;
      d2 << " bonferroni@" << alpha << "=" << fmt(bon.mean_coverage);
    }
    c1.pass = ok1;
    c1.detail = d1.str();
    c2.pass = ok2;
    c2.detail = d2.str();
  }
  results.push_back(c1);
  results.push_back(c2);

  // Criterion 3: tightness against the Bonferroni baseline.
  {
    Criterion c{"each SPIE is tighter than bonferroni on average at alpha 0.05"};
    spiband::TightnessParams params{default_latent_truth(),
                                    {Method::olshen, Method::olshen2, Method::gspie},
                                    0.05,
                                    50,
                                    1000,
                                    6021023,
                                    {1000, 0.5, true, true},
                                    0};
    const auto report_t = spiband::tightness_experiment(params);
    bool ok = true;
    std::ostringstream d;
    for (Method m : {Method::olshen, Method::olshen2, Method::gspie}) {
      const AggregateRow& row = find_aggregate(report_t.aggregates, m, 0.05, 32);
      if (!row.mean_percent_change || !(*row.mean_percent_change < 0.0)) ok = false;
      d << " " << spiband::to_string(m) << "="
        << (row.mean_percent_change ? fmt(*row.mean_percent_change) : "none") << "%";
    }
    c.pass = ok;
    c.detail = "mean width change vs bonferroni:" + d.str();
    results.push_back(c);
  }

  // Criterion 4: width under grid refinement.
  {
    Criterion c{"refining the grid 32->512 widens each SPIE by at most 25%, width at 512 <= 0.9"};
    spiband::SweepParams params;
    params.scale_location = 2.5;
    params.scale_spread = 0.4;
    params.shape_location = 0.15;
    params.shape_spread = 0.2;
    params.horizon = 30.0;
    params.methods = {Method::olshen, Method::olshen2, Method::gspie};
    params.alpha = 0.05;
    params.grid_sizes = {8, 16, 32, 64, 128, 256, 512};
    params.trials = 20;
    params.est_samples = 300;
    params.seed = 90210;
    params.settings = {300, 0.5, true, true};
    params.threads = 0;
    const auto sweep = spiband::discretization_sweep(params);
    bool ok = true;
    std::ostringstream d;
    for (Method m : params.methods) {
      const double w32 = find_aggregate(sweep.aggregates, m, 0.05, 32).mean_width;
      const double w512 = find_aggregate(sweep.aggregates, m, 0.05, 512).mean_width;
      if (!(w512 <= 1.25 * w32) || !(w512 <= 0.9)) ok = false;
      d << " " << spiband::to_string(m) << ": 32=" << fmt(w32) << " 512=" << fmt(w512)
        << " ratio=" << fmt(w512 / w32);
    }
    c.pass = ok;
    c.detail = d.str();
    results.push_back(c);
  }

  // Criterion 5: critical_k against the linear-scan reference, exactly.
  {
    Criterion c{"critical_k equals the brute-force scan on 100 instances"};
    const auto r = oracle::critical_k_oracle_suite(100, 515151);
    c.pass = r.ok();
    c.detail = r.summary();
    results.push_back(c);
  }

  // Criterion 6: gspie_step against full enumeration, exactly.
  {
    Criterion c{"gspie_step equals enumeration of all retractions on 1000 instances"};
    const auto r = oracle::gspie_step_oracle_suite(1000, 616161);
    c.pass = r.ok();
    c.detail = r.summary();
    results.push_back(c);
  }

  // Criterion 7: PAVA against block enumeration.
  {
    Criterion c{"pava matches the block-partition oracle (exhaustive n<=8 plus 200 random)"};
    const auto r = oracle::pava_oracle_suite(717171, 200);
    c.pass = r.ok();
    c.detail = r.summary();
    results.push_back(c);
  }

  // Criterion 8: hand-derived values.
  {
    Criterion c{"hand-derived decile, point-mass, and greedy-trace bands"};
    bool ok = true;
    std::ostringstream d;

    std::vector<std::vector<double>> decile_rows;
    for (int i = 0; i < 10; ++i) decile_rows.push_back({i / 10.0});
    spiband::OlshenConfig cfg;
    cfg.alpha = Alpha(0.2);
    cfg.resample = false;
    const Band deciles = spiband::olshen(testutil::matrix_of(decile_rows), cfg);
    if (std::abs(deciles.lower(0) - 0.10) > 1e-12 || std::abs(deciles.upper(0) - 0.80) > 1e-12) {
      ok = false;
    }
    d << "olshen deciles=[" << fmt(deciles.lower(0)) << "," << fmt(deciles.upper(0)) << "]";

    spiband::OlshenConfig cfg2;
    cfg2.alpha = Alpha(0.25);
    cfg2.resample = false;
    const Band point = spiband::two_sided_olshen(
        testutil::matrix_of({{0.0}, {0.0}, {0.0}, {1.0}}), cfg2);
    if (point.lower(0) != 0.0 || point.upper(0) != 0.0) ok = false;
    d << " two_sided=[" << fmt(point.lower(0)) << "," << fmt(point.upper(0)) << "]";

    const SampleMatrix line = testutil::matrix_of({{0.0}, {0.1}, {0.5}, {0.9}, {1.0}});
    const Band greedy = spiband::gspie_from_partitions(line, line, Alpha(0.2));
    if (greedy.lower(0) != 0.1 || greedy.upper(0) != 1.0) ok = false;
    d << " gspie=[" << fmt(greedy.lower(0)) << "," << fmt(greedy.upper(0)) << "]";

    c.pass = ok;
    c.detail = d.str();
    results.push_back(c);
  }

  // Criterion 9: property suites, each over at least 200 randomized cases.
  {
    Criterion c{"property suites over >= 200 cases each"};
    struct Named {
      const char* name;
      oracle::CheckResult r;
    };
    const Named suites[] = {
        {"denominator", props::denominator_invariance(200, 1001)},
        {"olshen_affine", props::olshen_affine_equivariance(200, 1002, false)},
        {"two_sided_affine", props::olshen_affine_equivariance(200, 1003, true)},
        {"gspie_affine", props::gspie_affine_equivariance(200, 1004)},
        {"gspie_validation_coverage", props::gspie_validation_coverage(200, 1005)},
        {"gspie_width_monotonic", props::gspie_width_monotonic(200, 1006)},
        {"projection", props::projection_properties(200, 1007)},
        {"coverage_monotone_in_k", props::coverage_monotone_in_k(200, 1008)},
        {"determinism", props::determinism(200, 1009)},
        {"multialpha", props::multialpha_consistency(200, 1010)},
    };
    bool ok = true;
    std::ostringstream d;
    for (const Named& s : suites) {
      if (!s.r.ok()) {
        ok = false;
        d << " " << s.name << ": " << s.r.summary() << ";";
      }
    }
    if (ok) d << "all suites passed (10 suites x 200 cases)";
    c.pass = ok;
    c.detail = d.str();
    results.push_back(c);
  }

  int failures = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    report(results[i], static_cast<int>(i + 1));
    if (!results[i].pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", results.size());
  return 0;
}
