#pragma once

#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "spiband/curves.hpp"
#include "spiband/eval.hpp"

namespace spiband {

// Sample CSV: a header row of grid times followed by one row per curve,
// comma-separated, LF line endings, no quoting. Values are written with 17
// significant digits, so a write/read round trip is bit-exact.
SampleMatrix read_sample_csv(const std::string& path, bool survival);
void write_sample_csv(const SampleMatrix& samples, const std::string& path);

struct BandMetadata {
  std::string method;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::optional<nlohmann::json> metrics;
};

struct LoadedBand {
  Band band;
  BandMetadata metadata;
};

// Band JSON keys: grid, lower, upper, method, alpha, seed, config, and
// optionally metrics. Doubles use shortest round-trip form, so read-back
// reproduces the band bit for bit.
void write_band_json(const Band& band, const BandMetadata& metadata, const std::string& path);
LoadedBand read_band_json(const std::string& path);

// Standalone SVG: shaded region between the linearly interpolated bounds,
// optional overlaid point-estimate curve, labeled axes, y fixed to [0, 1].
// Output is deterministic for identical inputs.
void render_band_svg(const Band& band, std::span<const double> curve, const std::string& path);

// Report CSV header: trial,method,alpha,grid_size,observed_coverage,
// average_width,percent_change. Absent percent changes render as an empty
// field; numbers use shortest round-trip form.
std::string report_csv_string(const ExperimentReport& report);
void write_report_csv(const ExperimentReport& report, const std::string& path);

nlohmann::json aggregate_json(const ExperimentReport& report);
nlohmann::json coverage_report_json(const CoverageReport& report);

}  // namespace spiband
