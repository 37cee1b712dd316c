#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spiband/curves.hpp"
#include "spiband/estimators.hpp"
#include "spiband/synth.hpp"

namespace spiband {

enum class Method { olshen, olshen2, gspie, bonferroni };

const char* to_string(Method method);
Method parse_method(std::string_view name);  // throws ParseError on unknown names

struct CoverageReport {
  double observed_coverage = 0.0;
  std::size_t n_test_samples = 0;
  double average_width = 0.0;
  std::optional<double> percent_change_vs_baseline;
};

// Fraction of test rows contained in the band; exact rational count / m.
double observed_coverage(const Band& band, const SampleMatrix& test);

// Mean over time points of upper - lower.
double average_width(const Band& band);

// 100 * (width - baseline_width) / baseline_width. Two zero widths compare
// equal by convention (degenerate data); a zero baseline against a nonzero
// width has no defined change and throws.
double percent_change(double width, double baseline_width);

using GeneratorConfig = std::variant<WeibullFamilyConfig, LatentGaussianConfig>;

SampleMatrix generate_curves(const GeneratorConfig& cfg, std::size_t count);
GeneratorConfig reseeded(GeneratorConfig cfg, std::uint64_t seed);
const TimeGrid& generator_grid(const GeneratorConfig& cfg);

// Knobs shared by every estimator invocation in the harnesses and the CLI.
struct EstimatorSettings {
  int bootstrap_reps = 1000;
  double split_fraction = 0.5;
  bool resample = true;
  bool project = true;  // project the finished band into survival space
};

Band estimate_band(Method method, const SampleMatrix& samples, Alpha alpha, std::uint64_t seed,
                   const EstimatorSettings& settings);

// Batch form sharing one bootstrap pass / greedy trajectory across levels;
// element i is bit-identical to the single call with alphas[i].
std::vector<Band> estimate_bands(Method method, const SampleMatrix& samples,
                                 std::span<const double> alphas, std::uint64_t seed,
                                 const EstimatorSettings& settings);

struct TrialRow {
  std::size_t trial = 0;  // 1-based
  Method method = Method::olshen;
  double alpha = 0.0;
  std::size_t grid_size = 0;
  double observed_coverage = 0.0;
  double average_width = 0.0;
  std::optional<double> percent_change;
};

struct AggregateRow {
  Method method = Method::olshen;
  double alpha = 0.0;
  std::size_t grid_size = 0;
  std::size_t trials = 0;
  double mean_coverage = 0.0;
  double stddev_coverage = 0.0;
  double mean_width = 0.0;
  double stddev_width = 0.0;
  // Normal-approximation 95% half-width of the mean width, 1.96 * stderr.
  double width_ci_halfwidth = 0.0;
  std::optional<double> mean_percent_change;
  std::optional<double> stddev_percent_change;
};

struct ExperimentReport {
  std::vector<TrialRow> trials;
  std::vector<AggregateRow> aggregates;
};

// Groups rows by (method, alpha, grid_size) in first-appearance order; the
// spread statistics use the n-1 denominator and are 0 for a single trial.
std::vector<AggregateRow> aggregate_rows(const std::vector<TrialRow>& rows);

struct CalibrationParams {
  GeneratorConfig truth;
  std::vector<Method> methods;
  std::vector<double> alphas;
  std::size_t trials = 1;
  std::size_t est_samples = 1000;
  std::size_t test_samples = 10000;
  std::uint64_t seed = 0;
  EstimatorSettings settings;
  unsigned threads = 0;  // 0 = all hardware threads
};

// Per trial: fresh estimation and test sets from the truth, one band per
// (method, alpha), coverage measured on the test set.
ExperimentReport calibration_experiment(const CalibrationParams& params);

struct TightnessParams {
  GeneratorConfig truth;
  std::vector<Method> methods;
  double alpha = 0.05;
  std::size_t trials = 1;
  std::size_t est_samples = 1000;
  std::uint64_t seed = 0;
  EstimatorSettings settings;
  unsigned threads = 0;
};

// Per trial: each method's width is compared against the Bonferroni band
// computed on the same samples; coverage is measured in-sample.
ExperimentReport tightness_experiment(const TightnessParams& params);

struct SweepParams {
  // Weibull family parameters; the grid is rebuilt per size as evenly spaced
  // points over (0, horizon].
  double scale_location = 0.0;
  double scale_spread = 0.0;
  double shape_location = 0.0;
  double shape_spread = 0.0;
  double horizon = 1.0;
  std::vector<Method> methods;
  double alpha = 0.05;
  std::vector<std::size_t> grid_sizes;
  std::size_t trials = 1;
  std::size_t est_samples = 1000;
  std::uint64_t seed = 0;
  EstimatorSettings settings;
  unsigned threads = 0;
};

// Width as a function of grid resolution on a fixed time horizon.
ExperimentReport discretization_sweep(const SweepParams& params);

}  // namespace spiband
