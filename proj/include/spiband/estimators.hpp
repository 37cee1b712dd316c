#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spiband/curves.hpp"

namespace spiband {

// Denominator of the per-column standard deviation. The calibrated band is
// invariant to this choice because every bootstrap set has the same size, so
// switching rescales every distance and the critical k by one constant.
enum class StddevDenominator { population, sample };

struct OlshenConfig {
  Alpha alpha{0.05};
  int bootstrap_reps = 1000;
  std::uint64_t seed = 0;
  // resample=false forces a single "bootstrap set" equal to the original
  // sample set; deterministic test mode.
  bool resample = true;
  StddevDenominator denominator = StddevDenominator::population;
};

struct ColumnStats {
  std::vector<double> mu;     // per-time sample mean
  std::vector<double> sigma;  // per-time standard deviation
};

struct TwoSidedStats {
  std::vector<double> med;          // per-time median
  std::vector<double> sigma_minus;  // RMS gap to values <= median
  std::vector<double> sigma_plus;   // RMS gap to values >= median
};

struct CriticalK {
  double value = 0.0;
};

struct GspieConfig {
  Alpha alpha{0.05};
  double split_fraction = 0.5;
  std::uint64_t seed = 0;
};

// Per-time mean and standard deviation over all rows. Columns whose values
// are all identical report an exactly zero sigma and the shared value as mu.
ColumnStats column_stats(const SampleMatrix& samples,
                         StddevDenominator denominator = StddevDenominator::population);

// Smallest scaling k for which the orthotope mu +/- k*sigma contains the
// sample: max_t |sample[t] - mu[t]| / sigma[t]. A zero sigma[t] contributes 0
// when the sample sits on the center within 1e-12 and +infinity otherwise.
double sample_max_distance(std::span<const double> sample, const ColumnStats& stats);

TwoSidedStats two_sided_stats(const SampleMatrix& samples);

// Asymmetric analogue: gap below the median is scaled by sigma_minus, at or
// above it by sigma_plus, with the same degenerate-sigma rule.
double two_sided_max_distance(std::span<const double> sample, const TwoSidedStats& stats);

// The q-th smallest pooled distance with q = ceil((1 - alpha) * count).
// With equal-size bootstrap sets the mean over sets of within-set coverage
// equals the pooled empirical CDF, so this order statistic is the smallest k
// whose mean bootstrap coverage reaches 1 - alpha.
CriticalK critical_k(std::span<const double> pooled_distances, Alpha alpha);

// Symmetric bootstrap-calibrated band around the per-time mean, clipped to
// [0, 1]. Bootstrap set b draws its rows from the substream (seed, b).
Band olshen(const SampleMatrix& samples, const OlshenConfig& cfg);

// Asymmetric variant around the per-time median.
Band two_sided_olshen(const SampleMatrix& samples, const OlshenConfig& cfg);

// Shared-bootstrap batch forms: the pooled distances do not depend on alpha,
// so one pass serves any number of levels. Element i corresponds to alphas[i]
// and is bit-identical to the single-alpha call with that level.
std::vector<Band> olshen_bands(const SampleMatrix& samples, const OlshenConfig& cfg,
                               std::span<const double> alphas);
std::vector<Band> two_sided_olshen_bands(const SampleMatrix& samples, const OlshenConfig& cfg,
                                         std::span<const double> alphas);

enum class WallSide { lower, upper };

struct WallRetraction {
  std::size_t time_index = 0;
  WallSide side = WallSide::lower;
  double new_value = 0.0;
  double width_reduction = 0.0;
  std::size_t excluded_count = 0;  // rows inside the band that fall outside
  double score = 0.0;              // width_reduction / excluded_count, +inf when free
};

// Best single-wall retraction onto the nearest strictly interior coordinate
// of an optimization row. Ties on score are broken lower-before-upper, then
// by smallest time index. nullopt when no wall has an interior coordinate.
std::optional<WallRetraction> gspie_step(const Band& band, const SampleMatrix& optimization_rows);

Band apply_retraction(const Band& band, const WallRetraction& retraction);

struct GspiePartitions {
  SampleMatrix optimization;
  SampleMatrix validation;
};

// Seeded shuffle, then a split_fraction / (1 - split_fraction) split; the
// optimization side takes round(split_fraction * m) rows, and both sides are
// kept non-empty.
GspiePartitions gspie_partitions(const SampleMatrix& samples, const GspieConfig& cfg);

// Greedy wall retraction from the bounding box of all rows, stopped when the
// next retraction would push validation coverage below 1 - alpha.
Band gspie(const SampleMatrix& samples, const GspieConfig& cfg);

// Core loop on explicit partitions. The initial band is the bounding box of
// the union, so the stopping condition starts satisfied for any alpha.
Band gspie_from_partitions(const SampleMatrix& optimization, const SampleMatrix& validation,
                           Alpha alpha);

// One greedy trajectory serves any number of levels: the retraction sequence
// does not depend on alpha, which only decides where along it to stop.
std::vector<Band> gspie_bands(const SampleMatrix& samples, const GspieConfig& cfg,
                              std::span<const double> alphas);

// Empirical distribution with linear interpolation between the CDF nodes
// (x_(i), i/(m+1)); p outside the node range clamps to the extreme order
// statistics. `sorted_values` must be ascending.
double ogive_quantile(std::span<const double> sorted_values, double p);

// Pointwise ogive intervals at level 1 - alpha/n per time point; the union
// bound makes the simultaneous coverage conservatively >= 1 - alpha.
Band bonferroni_band(const SampleMatrix& samples, Alpha alpha);

namespace detail {

// Unclipped variants, used to check affine-equivariance ahead of the [0, 1]
// clamp. Ordering matches `alphas`.
std::vector<Band> olshen_bands_unclipped(const SampleMatrix& samples, const OlshenConfig& cfg,
                                         std::span<const double> alphas);
std::vector<Band> two_sided_olshen_bands_unclipped(const SampleMatrix& samples,
                                                   const OlshenConfig& cfg,
                                                   std::span<const double> alphas);

// Pooled bootstrap distances (B * m values; set b contributes its m members'
// distances against that set's own statistics).
std::vector<double> olshen_pooled_distances(const SampleMatrix& samples, const OlshenConfig& cfg);
std::vector<double> two_sided_pooled_distances(const SampleMatrix& samples,
                                               const OlshenConfig& cfg);

ColumnStats column_stats_indexed(const SampleMatrix& samples, std::span<const std::uint32_t> idx,
                                 StddevDenominator denominator);
TwoSidedStats two_sided_stats_indexed(const SampleMatrix& samples,
                                      std::span<const std::uint32_t> idx);

struct GspieTraceEntry {
  WallRetraction retraction;
  double validation_coverage_after = 0.0;  // coverage if the step is applied
  bool applied = false;
};

// Full greedy trajectory on explicit partitions, including the candidate that
// triggered the stop (applied=false) when one exists.
struct GspieTrace {
  std::vector<GspieTraceEntry> steps;
  std::vector<Band> bands_after_applied;
  Band final_band;
};

GspieTrace gspie_trace(const SampleMatrix& optimization, const SampleMatrix& validation,
                       Alpha alpha);

}  // namespace detail

}  // namespace spiband
