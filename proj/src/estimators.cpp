#include "spiband/estimators.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "spiband/rng.hpp"
#include "spiband/synth.hpp"

namespace spiband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A sample on a zero-sigma coordinate counts as centered within this slack.
constexpr double kDegenerateTol = 1e-12;

void require_rows(const SampleMatrix& samples, std::size_t min_rows, const char* who) {
  if (samples.row_count() < min_rows) {
    throw Error(ErrorKind::TooFewSamples, std::string(who) + " needs at least " +
                                              std::to_string(min_rows) + " rows, got " +
                                              std::to_string(samples.row_count()));
  }
}

std::vector<std::uint32_t> identity_indices(std::size_t m) {
  std::vector<std::uint32_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0u);
  return idx;
}

std::size_t bootstrap_set_count(const OlshenConfig& cfg) {
  if (cfg.bootstrap_reps < 1) {
    throw Error(ErrorKind::InvalidConfig, "bootstrap_reps must be >= 1");
  }
  return cfg.resample ? static_cast<std::size_t>(cfg.bootstrap_reps) : 1;
}

Band clip01(const Band& band) {
  std::vector<double> lower(band.lower().begin(), band.lower().end());
  std::vector<double> upper(band.upper().begin(), band.upper().end());
  for (double& x : lower) x = std::clamp(x, 0.0, 1.0);
  for (double& x : upper) x = std::clamp(x, 0.0, 1.0);
  return Band(band.grid(), std::move(lower), std::move(upper));
}

Band symmetric_band(const TimeGrid& grid, const ColumnStats& stats, double k) {
  const std::size_t n = grid.size();
  std::vector<double> lower(n), upper(n);
  for (std::size_t t = 0; t < n; ++t) {
    // A degenerate wall stays on the center; this also keeps k = +inf from
    // producing 0 * inf.
    const double half = stats.sigma[t] == 0.0 ? 0.0 : k * stats.sigma[t];
    lower[t] = stats.mu[t] - half;
    upper[t] = stats.mu[t] + half;
  }
  return Band(grid, std::move(lower), std::move(upper));
}

Band asymmetric_band(const TimeGrid& grid, const TwoSidedStats& stats, double k) {
  const std::size_t n = grid.size();
  std::vector<double> lower(n), upper(n);
  for (std::size_t t = 0; t < n; ++t) {
    lower[t] = stats.sigma_minus[t] == 0.0 ? stats.med[t] : stats.med[t] - k * stats.sigma_minus[t];
    upper[t] = stats.sigma_plus[t] == 0.0 ? stats.med[t] : stats.med[t] + k * stats.sigma_plus[t];
  }
  return Band(grid, std::move(lower), std::move(upper));
}

std::vector<double> single_alpha(const OlshenConfig& cfg) { return {cfg.alpha.value}; }

}  // namespace

namespace detail {

ColumnStats column_stats_indexed(const SampleMatrix& samples, std::span<const std::uint32_t> idx,
                                 StddevDenominator denominator) {
  const std::size_t n = samples.col_count();
  const std::size_t m = idx.size();
  std::vector<double> sum(n, 0.0);
  std::vector<double> lo(n, kInf), hi(n, -kInf);
  for (std::uint32_t i : idx) {
    const auto row = samples.row(i);
    for (std::size_t t = 0; t < n; ++t) {
      sum[t] += row[t];
      lo[t] = std::min(lo[t], row[t]);
      hi[t] = std::max(hi[t], row[t]);
    }
  }
  ColumnStats stats;
  stats.mu.resize(n);
  stats.sigma.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    // Constant columns get the shared value and an exactly zero sigma, so
    // degenerate walls collapse onto the common point instead of drifting by
    // accumulated round-off.
    stats.mu[t] = lo[t] == hi[t] ? lo[t] : sum[t] / static_cast<double>(m);
  }
  std::vector<double> sqdev(n, 0.0);
  for (std::uint32_t i : idx) {
    const auto row = samples.row(i);
    for (std::size_t t = 0; t < n; ++t) {
      const double d = row[t] - stats.mu[t];
      sqdev[t] += d * d;
    }
  }
  const double denom = denominator == StddevDenominator::population
                           ? static_cast<double>(m)
                           : static_cast<double>(m - 1);
  for (std::size_t t = 0; t < n; ++t) {
    stats.sigma[t] = lo[t] == hi[t] ? 0.0 : std::sqrt(sqdev[t] / denom);
  }
  return stats;
}

TwoSidedStats two_sided_stats_indexed(const SampleMatrix& samples,
                                      std::span<const std::uint32_t> idx) {
  const std::size_t n = samples.col_count();
  const std::size_t m = idx.size();
  TwoSidedStats stats;
  stats.med.resize(n);
  stats.sigma_minus.resize(n);
  stats.sigma_plus.resize(n);
  std::vector<double> column(m);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < m; ++i) column[i] = samples.at(idx[i], t);
    double med;
    if (m % 2 == 1) {
      std::nth_element(column.begin(), column.begin() + m / 2, column.end());
      med = column[m / 2];
    } else {
      std::nth_element(column.begin(), column.begin() + m / 2, column.end());
      const double hi = column[m / 2];
      const double lo = *std::max_element(column.begin(), column.begin() + m / 2);
      med = (lo + hi) / 2.0;
    }
    // Values equal to the median contribute to both sides.
    double acc_minus = 0.0, acc_plus = 0.0;
    std::size_t cnt_minus = 0, cnt_plus = 0;
    for (double v : column) {
      if (v <= med) {
        acc_minus += (med - v) * (med - v);
        ++cnt_minus;
      }
      if (v >= med) {
        acc_plus += (v - med) * (v - med);
        ++cnt_plus;
      }
    }
    stats.med[t] = med;
    stats.sigma_minus[t] = cnt_minus == 0 ? 0.0 : std::sqrt(acc_minus / static_cast<double>(cnt_minus));
    stats.sigma_plus[t] = cnt_plus == 0 ? 0.0 : std::sqrt(acc_plus / static_cast<double>(cnt_plus));
  }
  return stats;
}

std::vector<double> olshen_pooled_distances(const SampleMatrix& samples, const OlshenConfig& cfg) {
  require_rows(samples, 2, "olshen");
  const std::size_t sets = bootstrap_set_count(cfg);
  const std::size_t m = samples.row_count();
  std::vector<double> pooled;
  pooled.reserve(sets * m);
  for (std::size_t b = 0; b < sets; ++b) {
    const std::vector<std::uint32_t> idx =
        cfg.resample ? bootstrap_indices(cfg.seed, b, m) : identity_indices(m);
    const ColumnStats stats = column_stats_indexed(samples, idx, cfg.denominator);
    for (std::uint32_t i : idx) pooled.push_back(sample_max_distance(samples.row(i), stats));
  }
  return pooled;
}

std::vector<double> two_sided_pooled_distances(const SampleMatrix& samples,
                                               const OlshenConfig& cfg) {
  require_rows(samples, 2, "two_sided_olshen");
  const std::size_t sets = bootstrap_set_count(cfg);
  const std::size_t m = samples.row_count();
  std::vector<double> pooled;
  pooled.reserve(sets * m);
  for (std::size_t b = 0; b < sets; ++b) {
    const std::vector<std::uint32_t> idx =
        cfg.resample ? bootstrap_indices(cfg.seed, b, m) : identity_indices(m);
    const TwoSidedStats stats = two_sided_stats_indexed(samples, idx);
    for (std::uint32_t i : idx) pooled.push_back(two_sided_max_distance(samples.row(i), stats));
  }
  return pooled;
}

std::vector<Band> olshen_bands_unclipped(const SampleMatrix& samples, const OlshenConfig& cfg,
                                         std::span<const double> alphas) {
  const std::vector<double> pooled = olshen_pooled_distances(samples, cfg);
  const ColumnStats stats =
      column_stats_indexed(samples, identity_indices(samples.row_count()), cfg.denominator);
  std::vector<Band> bands;
  bands.reserve(alphas.size());
  for (double a : alphas) {
    bands.push_back(symmetric_band(samples.grid(), stats, critical_k(pooled, Alpha(a)).value));
  }
  return bands;
}

std::vector<Band> two_sided_olshen_bands_unclipped(const SampleMatrix& samples,
                                                   const OlshenConfig& cfg,
                                                   std::span<const double> alphas) {
  const std::vector<double> pooled = two_sided_pooled_distances(samples, cfg);
  const TwoSidedStats stats =
      two_sided_stats_indexed(samples, identity_indices(samples.row_count()));
  std::vector<Band> bands;
  bands.reserve(alphas.size());
  for (double a : alphas) {
    bands.push_back(asymmetric_band(samples.grid(), stats, critical_k(pooled, Alpha(a)).value));
  }
  return bands;
}

}  // namespace detail

ColumnStats column_stats(const SampleMatrix& samples, StddevDenominator denominator) {
  require_rows(samples, 2, "column_stats");
  return detail::column_stats_indexed(samples, identity_indices(samples.row_count()), denominator);
}

TwoSidedStats two_sided_stats(const SampleMatrix& samples) {
  require_rows(samples, 2, "two_sided_stats");
  return detail::two_sided_stats_indexed(samples, identity_indices(samples.row_count()));
}

double sample_max_distance(std::span<const double> sample, const ColumnStats& stats) {
  if (sample.size() != stats.mu.size()) {
    throw Error(ErrorKind::DimensionMismatch, "sample length does not match statistics");
  }
  double worst = 0.0;
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const double gap = std::abs(sample[t] - stats.mu[t]);
    if (stats.sigma[t] == 0.0) {
      if (gap > kDegenerateTol) return kInf;
      continue;
    }
    worst = std::max(worst, gap / stats.sigma[t]);
  }
  return worst;
}

double two_sided_max_distance(std::span<const double> sample, const TwoSidedStats& stats) {
  if (sample.size() != stats.med.size()) {
    throw Error(ErrorKind::DimensionMismatch, "sample length does not match statistics");
  }
  double worst = 0.0;
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const bool below = sample[t] < stats.med[t];
    const double gap = below ? stats.med[t] - sample[t] : sample[t] - stats.med[t];
    const double scale = below ? stats.sigma_minus[t] : stats.sigma_plus[t];
    if (scale == 0.0) {
      if (gap > kDegenerateTol) return kInf;
      continue;
    }
    worst = std::max(worst, gap / scale);
  }
  return worst;
}

CriticalK critical_k(std::span<const double> pooled_distances, Alpha alpha) {
  if (pooled_distances.empty()) {
    throw Error(ErrorKind::EmptyInput, "critical_k needs at least one pooled distance");
  }
  const std::size_t count = pooled_distances.size();
  const double target = (1.0 - alpha.value) * static_cast<double>(count);
  const std::size_t q = static_cast<std::size_t>(
      std::clamp(std::ceil(target), 1.0, static_cast<double>(count)));
  std::vector<double> scratch(pooled_distances.begin(), pooled_distances.end());
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(q - 1),
                   scratch.end());
  return CriticalK{scratch[q - 1]};
}

Band olshen(const SampleMatrix& samples, const OlshenConfig& cfg) {
  return clip01(detail::olshen_bands_unclipped(samples, cfg, single_alpha(cfg)).front());
}

Band two_sided_olshen(const SampleMatrix& samples, const OlshenConfig& cfg) {
  return clip01(detail::two_sided_olshen_bands_unclipped(samples, cfg, single_alpha(cfg)).front());
}

std::vector<Band> olshen_bands(const SampleMatrix& samples, const OlshenConfig& cfg,
                               std::span<const double> alphas) {
  std::vector<Band> bands = detail::olshen_bands_unclipped(samples, cfg, alphas);
  for (Band& b : bands) b = clip01(b);
  return bands;
}

std::vector<Band> two_sided_olshen_bands(const SampleMatrix& samples, const OlshenConfig& cfg,
                                         std::span<const double> alphas) {
  std::vector<Band> bands = detail::two_sided_olshen_bands_unclipped(samples, cfg, alphas);
  for (Band& b : bands) b = clip01(b);
  return bands;
}

std::optional<WallRetraction> gspie_step(const Band& band, const SampleMatrix& optimization_rows) {
  if (!(band.grid() == optimization_rows.grid())) {
    throw Error(ErrorKind::DimensionMismatch, "band and optimization rows use different grids");
  }
  const std::size_t n = band.size();
  const std::size_t m = optimization_rows.row_count();
  std::vector<char> inside(m);
  for (std::size_t i = 0; i < m; ++i) {
    inside[i] = contains(band, optimization_rows.row(i)) ? 1 : 0;
  }

  std::optional<WallRetraction> best;
  auto consider = [&](const WallRetraction& cand) {
    // Walls are visited lower-first then by ascending time index, so keeping
    // the first strict maximum realizes the documented tie-break.
    if (!best || cand.score > best->score) best = cand;
  };

  for (int side = 0; side < 2; ++side) {
    const bool is_lower = side == 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double lo = band.lower(t);
      const double up = band.upper(t);
      double nearest = is_lower ? kInf : -kInf;
      bool found = false;
      for (std::size_t i = 0; i < m; ++i) {
        const double v = optimization_rows.at(i, t);
        if (v > lo && v < up) {
          nearest = is_lower ? std::min(nearest, v) : std::max(nearest, v);
          found = true;
        }
      }
      if (!found) continue;
      std::size_t excluded = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (!inside[i]) continue;
        const double v = optimization_rows.at(i, t);
        if (is_lower ? v < nearest : v > nearest) ++excluded;
      }
      WallRetraction cand;
      cand.time_index = t;
      cand.side = is_lower ? WallSide::lower : WallSide::upper;
      cand.new_value = nearest;
      cand.width_reduction = is_lower ? nearest - lo : up - nearest;
      cand.excluded_count = excluded;
      cand.score = excluded == 0 ? kInf : cand.width_reduction / static_cast<double>(excluded);
      consider(cand);
    }
  }
  return best;
}

Band apply_retraction(const Band& band, const WallRetraction& retraction) {
  std::vector<double> lower(band.lower().begin(), band.lower().end());
  std::vector<double> upper(band.upper().begin(), band.upper().end());
  if (retraction.side == WallSide::lower) {
    lower[retraction.time_index] = retraction.new_value;
  } else {
    upper[retraction.time_index] = retraction.new_value;
  }
  return Band(band.grid(), std::move(lower), std::move(upper));
}

GspiePartitions gspie_partitions(const SampleMatrix& samples, const GspieConfig& cfg) {
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "split_fraction must lie in (0, 1)");
  }
  require_rows(samples, 2, "gspie_partitions");
  const std::size_t m = samples.row_count();
  const std::size_t n = samples.col_count();

  std::vector<std::uint32_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0u);
  rng::Stream stream = rng::Stream::substream(cfg.seed, 0);
  for (std::size_t i = m - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.next_below(i + 1));
    std::swap(perm[i], perm[j]);
  }

  const auto opt_count = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(cfg.split_fraction * static_cast<double>(m)), 1, static_cast<long long>(m - 1)));

  auto gather = [&](std::size_t begin, std::size_t end) {
    std::vector<double> flat;
    flat.reserve((end - begin) * n);
    for (std::size_t r = begin; r < end; ++r) {
      const auto row = samples.row(perm[r]);
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return SampleMatrix::unchecked(samples.grid(), std::move(flat), end - begin);
  };
  return GspiePartitions{gather(0, opt_count), gather(opt_count, m)};
}

namespace {

std::size_t count_newly_excluded(const SampleMatrix& rows, const std::vector<char>& inside,
                                 const WallRetraction& cand) {
  std::size_t newly = 0;
  for (std::size_t i = 0; i < rows.row_count(); ++i) {
    if (!inside[i]) continue;
    const double v = rows.at(i, cand.time_index);
    if (cand.side == WallSide::lower ? v < cand.new_value : v > cand.new_value) ++newly;
  }
  return newly;
}

void mark_newly_excluded(const SampleMatrix& rows, std::vector<char>& inside,
                         const WallRetraction& cand) {
  for (std::size_t i = 0; i < rows.row_count(); ++i) {
    if (!inside[i]) continue;
    const double v = rows.at(i, cand.time_index);
    if (cand.side == WallSide::lower ? v < cand.new_value : v > cand.new_value) inside[i] = 0;
  }
}

Band union_bounding_band(const SampleMatrix& a, const SampleMatrix& b) {
  const Band ba = bounding_band(a);
  const Band bb = bounding_band(b);
  std::vector<double> lower(ba.size()), upper(ba.size());
  for (std::size_t t = 0; t < ba.size(); ++t) {
    lower[t] = std::min(ba.lower(t), bb.lower(t));
    upper[t] = std::max(ba.upper(t), bb.upper(t));
  }
  return Band(a.grid(), std::move(lower), std::move(upper));
}

// Greedy loop shared by all gspie entry points. `decide` sees the band being
// retracted, the candidate and the validation coverage it would leave;
// returning false stops before the candidate is applied.
Band gspie_run(
    const SampleMatrix& opt, const SampleMatrix& val,
    const std::function<bool(const Band&, const WallRetraction&, double)>& decide,
    const std::function<void(const Band&, const WallRetraction&, double)>& on_applied) {
  if (!(opt.grid() == val.grid())) {
    throw Error(ErrorKind::DimensionMismatch, "partitions use different grids");
  }
  Band band = union_bounding_band(opt, val);
  const std::size_t m_val = val.row_count();
  std::vector<char> inside_val(m_val, 1);
  std::size_t inside_count = m_val;

  for (;;) {
    const std::optional<WallRetraction> cand = gspie_step(band, opt);
    if (!cand) break;
    const std::size_t newly = count_newly_excluded(val, inside_val, *cand);
    const double coverage_after =
        static_cast<double>(inside_count - newly) / static_cast<double>(m_val);
    if (!decide(band, *cand, coverage_after)) break;
    mark_newly_excluded(val, inside_val, *cand);
    inside_count -= newly;
    band = apply_retraction(band, *cand);
    if (on_applied) on_applied(band, *cand, coverage_after);
  }
  return band;
}

}  // namespace

Band gspie_from_partitions(const SampleMatrix& optimization, const SampleMatrix& validation,
                           Alpha alpha) {
  const double threshold = 1.0 - alpha.value;
  return gspie_run(
      optimization, validation,
      [threshold](const Band&, const WallRetraction&, double cov) { return cov >= threshold; },
      nullptr);
}

Band gspie(const SampleMatrix& samples, const GspieConfig& cfg) {
  require_rows(samples, 4, "gspie");
  const GspiePartitions parts = gspie_partitions(samples, cfg);
  return gspie_from_partitions(parts.optimization, parts.validation, cfg.alpha);
}

std::vector<Band> gspie_bands(const SampleMatrix& samples, const GspieConfig& cfg,
                              std::span<const double> alphas) {
  require_rows(samples, 4, "gspie");
  std::vector<double> thresholds;
  thresholds.reserve(alphas.size());
  for (double a : alphas) thresholds.push_back(1.0 - Alpha(a).value);

  const GspiePartitions parts = gspie_partitions(samples, cfg);
  std::vector<std::optional<Band>> result(alphas.size());
  std::size_t unassigned = alphas.size();

  const Band last = gspie_run(
      parts.optimization, parts.validation,
      [&](const Band& current, const WallRetraction&, double cov) {
        for (std::size_t i = 0; i < result.size(); ++i) {
          if (!result[i] && cov < thresholds[i]) {
            result[i] = current;
            --unassigned;
          }
        }
        return unassigned > 0;
      },
      nullptr);

  std::vector<Band> bands;
  bands.reserve(alphas.size());
  for (auto& slot : result) bands.push_back(slot ? std::move(*slot) : last);
  return bands;
}

namespace detail {

GspieTrace gspie_trace(const SampleMatrix& optimization, const SampleMatrix& validation,
                       Alpha alpha) {
  const double threshold = 1.0 - alpha.value;
  std::vector<GspieTraceEntry> steps;
  std::vector<Band> applied;
  Band final_band = gspie_run(
      optimization, validation,
      [&](const Band&, const WallRetraction& cand, double cov) {
        const bool keep = cov >= threshold;
        steps.push_back(GspieTraceEntry{cand, cov, keep});
        return keep;
      },
      [&](const Band& after, const WallRetraction&, double) { applied.push_back(after); });
  return GspieTrace{std::move(steps), std::move(applied), std::move(final_band)};
}

}  // namespace detail

double ogive_quantile(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) {
    throw Error(ErrorKind::EmptyInput, "ogive_quantile needs at least one value");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "quantile level must lie in [0, 1]");
  }
  assert(std::is_sorted(sorted_values.begin(), sorted_values.end()));
  const auto m = static_cast<double>(sorted_values.size());
  const double h = p * (m + 1.0);
  if (h <= 1.0) return sorted_values.front();
  if (h >= m) return sorted_values.back();
  const auto i = static_cast<std::size_t>(h);  // 1-based node index of the left neighbor
  const double w = h - static_cast<double>(i);
  return sorted_values[i - 1] + w * (sorted_values[i] - sorted_values[i - 1]);
}

Band bonferroni_band(const SampleMatrix& samples, Alpha alpha) {
  require_rows(samples, 2, "bonferroni_band");
  const std::size_t n = samples.col_count();
  const std::size_t m = samples.row_count();
  const double p_low = alpha.value / (2.0 * static_cast<double>(n));
  const double p_high = 1.0 - p_low;
  std::vector<double> lower(n), upper(n), column(m);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < m; ++i) column[i] = samples.at(i, t);
    std::sort(column.begin(), column.end());
    lower[t] = ogive_quantile(column, p_low);
    upper[t] = ogive_quantile(column, p_high);
  }
  return Band(samples.grid(), std::move(lower), std::move(upper));
}

}  // namespace spiband
