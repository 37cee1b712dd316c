#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spiband/error.hpp"

namespace spiband {

// Tolerance used when checking that a curve is non-increasing; absorbs
// floating-point round-off in externally generated samples.
inline constexpr double kMonotoneTol = 1e-9;

// Strictly increasing evaluation times t_1 < ... < t_n.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);

  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }
  std::span<const double> times() const noexcept { return times_; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.times_ == b.times_;
  }

 private:
  std::vector<double> times_;
};

// Miscoverage level, 0 < value < 1.
struct Alpha {
  explicit Alpha(double v) : value(v) {
    if (!(v > 0.0 && v < 1.0)) {
      throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
    }
  }
  double value;
};

// m sampled curves evaluated on a shared grid, row-major, values in [0, 1].
class SampleMatrix {
 public:
  std::size_t row_count() const noexcept { return rows_; }
  std::size_t col_count() const noexcept { return grid_.size(); }
  const TimeGrid& grid() const noexcept { return grid_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * grid_.size(), grid_.size()};
  }
  double at(std::size_t i, std::size_t t) const { return data_[i * grid_.size() + t]; }
  std::span<const double> data() const noexcept { return data_; }

  // Trusts the caller to supply in-range data of shape m x grid.size().
  static SampleMatrix unchecked(TimeGrid grid, std::vector<double> flat, std::size_t m);

 private:
  SampleMatrix(TimeGrid grid, std::vector<double> flat, std::size_t m)
      : grid_(std::move(grid)), data_(std::move(flat)), rows_(m) {}

  friend SampleMatrix validate_matrix(const std::vector<std::vector<double>>&, TimeGrid, bool);
  friend SampleMatrix validate_matrix_flat(std::vector<double>, TimeGrid, bool);

  TimeGrid grid_;
  std::vector<double> data_;
  std::size_t rows_;
};

// Validates shape and ranges; with survival=true additionally requires each
// row to be non-increasing within kMonotoneTol.
SampleMatrix validate_matrix(const std::vector<std::vector<double>>& rows, TimeGrid grid,
                             bool survival);
SampleMatrix validate_matrix_flat(std::vector<double> flat, TimeGrid grid, bool survival);

// Axis-aligned orthotope: the simultaneous prediction interval being built.
class Band {
 public:
  Band(TimeGrid grid, std::vector<double> lower, std::vector<double> upper);

  std::size_t size() const noexcept { return grid_.size(); }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }
  double lower(std::size_t t) const { return lower_[t]; }
  double upper(std::size_t t) const { return upper_[t]; }

 private:
  TimeGrid grid_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

// Closed-interval membership: boundary samples count as inside.
bool contains(const Band& band, std::span<const double> sample);

// Componentwise min/max box of all rows; tight by construction.
Band bounding_band(const SampleMatrix& samples);

// Least-squares projection onto the non-increasing cone {b : b_i >= b_{i+1}}
// by pool-adjacent-violators. Exactly idempotent and mean-preserving.
std::vector<double> pava_antitonic(std::span<const double> v);

// Projects both bounds into survival space and clips to [0, 1]. PAVA is
// order-preserving, so lower <= upper survives the projection.
Band project_band(const Band& band);

}  // namespace spiband
