#pragma once

#include <cstdint>
#include <vector>

#include "spiband/curves.hpp"

namespace spiband {

// Weibull survival family: per row, scale and shape are drawn log-normally
// (location/spread given in log space) and the row is S(t) = exp(-(t/scale)^shape).
struct WeibullFamilyConfig {
  TimeGrid grid;
  double scale_location = 0.0;
  double scale_spread = 0.0;
  double shape_location = 0.0;
  double shape_spread = 0.0;
  std::uint64_t seed = 0;
};

// Latent-Gaussian family: the base curve is perturbed in logit space by an
// AR(1) noise path with lag-1 correlation exp(-correlation_decay * dt), then
// squashed back through the logistic function and sorted into non-increasing
// order.
struct LatentGaussianConfig {
  TimeGrid grid;
  std::vector<double> base_curve;
  double correlation_decay = 0.0;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
};

SampleMatrix gen_weibull_curves(const WeibullFamilyConfig& cfg, std::size_t count);

SampleMatrix gen_latent_gaussian_curves(const LatentGaussianConfig& cfg, std::size_t count);

// Row indices of bootstrap set `set_index`: m draws with replacement from
// {0..m-1}, deterministic per (seed, set_index) and independent across sets.
std::vector<std::uint32_t> bootstrap_indices(std::uint64_t seed, std::uint64_t set_index,
                                             std::size_t m);

std::vector<SampleMatrix> bootstrap_rows(const SampleMatrix& samples, std::uint64_t seed,
                                         std::size_t count_sets);

}  // namespace spiband
