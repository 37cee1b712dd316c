#include "spiband/curves.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spiband {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) {
    throw Error(ErrorKind::EmptyInput, "time grid must hold at least one point");
  }
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!(times_[i] < times_[i + 1])) {
      throw Error(ErrorKind::NonIncreasingGrid,
                  "time grid must be strictly increasing at index " + std::to_string(i + 1));
    }
  }
}

SampleMatrix SampleMatrix::unchecked(TimeGrid grid, std::vector<double> flat, std::size_t m) {
  return SampleMatrix(std::move(grid), std::move(flat), m);
}

namespace {

void check_row(std::span<const double> row, std::size_t index, bool survival) {
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (!(row[t] >= 0.0 && row[t] <= 1.0)) {
      throw Error(ErrorKind::OutOfRange, "row " + std::to_string(index) + " has value " +
                                             std::to_string(row[t]) + " outside [0, 1]");
    }
  }
  if (survival) {
    for (std::size_t t = 0; t + 1 < row.size(); ++t) {
      if (row[t + 1] > row[t] + kMonotoneTol) {
        throw Error(ErrorKind::NotMonotone,
                    "row " + std::to_string(index) + " increases at index " + std::to_string(t + 1));
      }
    }
  }
}

}  // namespace

SampleMatrix validate_matrix(const std::vector<std::vector<double>>& rows, TimeGrid grid,
                             bool survival) {
  const std::size_t n = grid.size();
  std::vector<double> flat;
  flat.reserve(rows.size() * n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != n) {
      throw Error(ErrorKind::RaggedRows, "row " + std::to_string(i) + " has " +
                                             std::to_string(rows[i].size()) + " values, expected " +
                                             std::to_string(n));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return validate_matrix_flat(std::move(flat), std::move(grid), survival);
}

SampleMatrix validate_matrix_flat(std::vector<double> flat, TimeGrid grid, bool survival) {
  const std::size_t n = grid.size();
  if (flat.size() % n != 0) {
    throw Error(ErrorKind::RaggedRows, "flat data is not a multiple of the grid size");
  }
  const std::size_t m = flat.size() / n;
  for (std::size_t i = 0; i < m; ++i) {
    check_row({flat.data() + i * n, n}, i, survival);
  }
  return SampleMatrix::unchecked(std::move(grid), std::move(flat), m);
}

Band::Band(TimeGrid grid, std::vector<double> lower, std::vector<double> upper)
    : grid_(std::move(grid)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != grid_.size() || upper_.size() != grid_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "band bounds must match the grid length");
  }
  for (std::size_t t = 0; t < lower_.size(); ++t) {
    if (!(lower_[t] <= upper_[t])) {
      throw Error(ErrorKind::InvalidConfig,
                  "band lower bound exceeds upper bound at index " + std::to_string(t));
    }
  }
}

bool contains(const Band& band, std::span<const double> sample) {
  if (sample.size() != band.size()) {
    throw Error(ErrorKind::DimensionMismatch, "sample length does not match band grid");
  }
  for (std::size_t t = 0; t < sample.size(); ++t) {
    if (sample[t] < band.lower(t) || sample[t] > band.upper(t)) return false;
  }
  return true;
}

Band bounding_band(const SampleMatrix& samples) {
  if (samples.row_count() == 0) {
    throw Error(ErrorKind::EmptyMatrix, "bounding_band needs at least one row");
  }
  const std::size_t n = samples.col_count();
  std::vector<double> lower(samples.row(0).begin(), samples.row(0).end());
  std::vector<double> upper = lower;
  for (std::size_t i = 1; i < samples.row_count(); ++i) {
    const auto row = samples.row(i);
    for (std::size_t t = 0; t < n; ++t) {
      lower[t] = std::min(lower[t], row[t]);
      upper[t] = std::max(upper[t], row[t]);
    }
  }
  return Band(samples.grid(), std::move(lower), std::move(upper));
}

std::vector<double> pava_antitonic(std::span<const double> v) {
  // Blocks carry (mean, weight). A non-increasing fit is violated when a
  // later block mean exceeds an earlier one; violators are pooled into their
  // weighted mean. On termination adjacent means satisfy mean[i] >= mean[i+1]
  // by the loop condition itself, so the expansion is exactly non-increasing
  // and a second pass performs no merges.
  std::vector<double> mean;
  std::vector<std::size_t> weight;
  mean.reserve(v.size());
  weight.reserve(v.size());
  for (double x : v) {
    mean.push_back(x);
    weight.push_back(1);
    while (mean.size() >= 2 && mean[mean.size() - 1] > mean[mean.size() - 2]) {
      const std::size_t k = mean.size() - 1;
      const double pooled = (mean[k - 1] * static_cast<double>(weight[k - 1]) +
                             mean[k] * static_cast<double>(weight[k])) /
                            static_cast<double>(weight[k - 1] + weight[k]);
      mean[k - 1] = pooled;
      weight[k - 1] += weight[k];
      mean.pop_back();
      weight.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t b = 0; b < mean.size(); ++b) {
    out.insert(out.end(), weight[b], mean[b]);
  }
  return out;
}

namespace {

std::vector<double> project_clipped(std::span<const double> v) {
  std::vector<double> out = pava_antitonic(v);
  for (double& x : out) x = std::clamp(x, 0.0, 1.0);
  return out;
}

}  // namespace

Band project_band(const Band& band) {
  std::vector<double> lower = project_clipped(band.lower());
  std::vector<double> upper = project_clipped(band.upper());
  // PAVA is order-preserving in exact arithmetic; pooled means can still land
  // an ulp across each other, so pin the guarantee here. Both vectors stay
  // non-increasing: this lifts upper toward the (non-increasing) lower where
  // they touch, and a second projection is still the identity.
  for (std::size_t t = 0; t < lower.size(); ++t) upper[t] = std::max(upper[t], lower[t]);
  return Band(band.grid(), std::move(lower), std::move(upper));
}

}  // namespace spiband
