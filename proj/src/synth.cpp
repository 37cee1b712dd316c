#include "spiband/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spiband/error.hpp"
#include "spiband/rng.hpp"

namespace spiband {

namespace {

// Keeps logit finite when the base curve touches 0 or 1.
constexpr double kLatentClamp = 1e-7;

double logit(double p) { return std::log(p / (1.0 - p)); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

SampleMatrix gen_weibull_curves(const WeibullFamilyConfig& cfg, std::size_t count) {
  if (count < 1) throw Error(ErrorKind::InvalidConfig, "count must be >= 1");
  if (cfg.scale_spread < 0.0 || cfg.shape_spread < 0.0) {
    throw Error(ErrorKind::InvalidConfig, "spreads must be >= 0");
  }
  const auto times = cfg.grid.times();
  if (!times.empty() && times.front() <= 0.0) {
    throw Error(ErrorKind::InvalidConfig, "Weibull grid times must be > 0");
  }
  const std::size_t n = cfg.grid.size();
  std::vector<double> flat;
  flat.reserve(count * n);
  for (std::size_t i = 0; i < count; ++i) {
    rng::Stream stream = rng::Stream::substream(cfg.seed, i);
    const double scale = std::exp(cfg.scale_location + cfg.scale_spread * stream.next_normal());
    const double shape = std::exp(cfg.shape_location + cfg.shape_spread * stream.next_normal());
    for (double t : times) flat.push_back(std::exp(-std::pow(t / scale, shape)));
  }
  return SampleMatrix::unchecked(cfg.grid, std::move(flat), count);
}

SampleMatrix gen_latent_gaussian_curves(const LatentGaussianConfig& cfg, std::size_t count) {
  if (count < 1) throw Error(ErrorKind::InvalidConfig, "count must be >= 1");
  if (cfg.correlation_decay < 0.0 || cfg.noise_scale < 0.0) {
    throw Error(ErrorKind::InvalidConfig, "correlation_decay and noise_scale must be >= 0");
  }
  const std::size_t n = cfg.grid.size();
  validate_matrix_flat(cfg.base_curve, cfg.grid, /*survival=*/true);

  std::vector<double> flat;
  flat.reserve(count * n);
  if (cfg.noise_scale == 0.0) {
    // Zero perturbation reproduces the base curve bit for bit.
    for (std::size_t i = 0; i < count; ++i) {
      flat.insert(flat.end(), cfg.base_curve.begin(), cfg.base_curve.end());
    }
    return SampleMatrix::unchecked(cfg.grid, std::move(flat), count);
  }

  const auto times = cfg.grid.times();
  std::vector<double> latent_base(n);
  for (std::size_t t = 0; t < n; ++t) {
    latent_base[t] = logit(std::clamp(cfg.base_curve[t], kLatentClamp, 1.0 - kLatentClamp));
  }
  std::vector<double> row(n);
  for (std::size_t i = 0; i < count; ++i) {
    rng::Stream stream = rng::Stream::substream(cfg.seed, i);
    double noise = stream.next_normal();
    row[0] = sigmoid(latent_base[0] + cfg.noise_scale * noise);
    for (std::size_t t = 1; t < n; ++t) {
      const double rho = std::exp(-cfg.correlation_decay * (times[t] - times[t - 1]));
      noise = rho * noise + std::sqrt(1.0 - rho * rho) * stream.next_normal();
      row[t] = sigmoid(latent_base[t] + cfg.noise_scale * noise);
    }
    std::sort(row.begin(), row.end(), std::greater<>());
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return SampleMatrix::unchecked(cfg.grid, std::move(flat), count);
}

std::vector<std::uint32_t> bootstrap_indices(std::uint64_t seed, std::uint64_t set_index,
                                             std::size_t m) {
  rng::Stream stream = rng::Stream::substream(seed, set_index);
  std::vector<std::uint32_t> idx(m);
  for (auto& v : idx) v = static_cast<std::uint32_t>(stream.next_below(m));
  return idx;
}

std::vector<SampleMatrix> bootstrap_rows(const SampleMatrix& samples, std::uint64_t seed,
                                         std::size_t count_sets) {
  const std::size_t m = samples.row_count();
  const std::size_t n = samples.col_count();
  if (m == 0) throw Error(ErrorKind::EmptyMatrix, "bootstrap_rows needs a non-empty matrix");
  std::vector<SampleMatrix> sets;
  sets.reserve(count_sets);
  for (std::size_t b = 0; b < count_sets; ++b) {
    const std::vector<std::uint32_t> idx = bootstrap_indices(seed, b, m);
    std::vector<double> flat;
    flat.reserve(m * n);
    for (std::uint32_t i : idx) {
      const auto row = samples.row(i);
      flat.insert(flat.end(), row.begin(), row.end());
    }
    sets.push_back(SampleMatrix::unchecked(samples.grid(), std::move(flat), m));
  }
  return sets;
}

}  // namespace spiband
