#ifndef OCCUDEV_PATHS_HPP_
#define OCCUDEV_PATHS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "occudev/rng.hpp"

namespace occudev {

/// Uniform grid s_k = k / n_steps on the unit horizon [0, 1].
class TimeGrid {
public:
  explicit TimeGrid(std::size_t n_steps) : n_steps_(n_steps) {
    if (n_steps < 2) {
      throw std::invalid_argument("TimeGrid: n_steps must be at least 2, got " +
                                  std::to_string(n_steps));
    }
    dt_ = 1.0 / static_cast<double>(n_steps);
  }

  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_points() const { return n_steps_ + 1; }
  double dt() const { return dt_; }
  double time(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(n_steps_);
  }

  /// Index of the largest grid point not after s (s clamped to [0, 1]).
  std::size_t index_at(double s) const {
    if (!(s > 0.0)) return 0;
    if (s >= 1.0) return n_steps_;
    const auto k = static_cast<std::size_t>(
        std::floor(s * static_cast<double>(n_steps_) + 1e-9));
    return k > n_steps_ ? n_steps_ : k;
  }

  friend bool operator==(const TimeGrid &, const TimeGrid &) = default;

private:
  std::size_t n_steps_;
  double dt_;
};

/// Scalar trajectory sampled on a TimeGrid.
class Path {
public:
  Path(TimeGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.n_points()) {
      throw std::invalid_argument("Path: expected " +
                                  std::to_string(grid_.n_points()) +
                                  " values, got " +
                                  std::to_string(values_.size()));
    }
  }

  /// Path with values[k] = f(k).
  template <typename F> static Path generate(TimeGrid grid, F &&f) {
    std::vector<double> v(grid.n_points());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(k);
    return Path(grid, std::move(v));
  }

  const TimeGrid &grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

private:
  TimeGrid grid_;
  std::vector<double> values_;
};

/// dim x n_steps block of N(0, dt) increments, row-major (one row per
/// coordinate of the driving Brownian motion).
class Increments {
public:
  Increments(TimeGrid grid, std::size_t dim)
      : grid_(grid), dim_(dim), data_(dim * grid.n_steps(), 0.0) {
    if (dim == 0) {
      throw std::invalid_argument("Increments: dim must be positive");
    }
  }

  const TimeGrid &grid() const { return grid_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t d) const {
    return std::span<const double>(data_).subspan(d * grid_.n_steps(),
                                                  grid_.n_steps());
  }
  std::span<double> row(std::size_t d) {
    return std::span<double>(data_).subspan(d * grid_.n_steps(),
                                            grid_.n_steps());
  }

private:
  TimeGrid grid_;
  std::size_t dim_;
  std::vector<double> data_;
};

/// Fills one row with N(0, dt) draws from sub-stream `coordinate`.
inline void fill_gaussian_row(const SeedSpec &seed, std::uint32_t coordinate,
                              double dt, std::span<double> out) {
  PhiloxStream stream(seed, coordinate);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(dt);
  for (double &v : out) v = scale * normal(stream);
}

inline Increments sample_increments(const SeedSpec &seed, const TimeGrid &grid,
                                    std::size_t dim) {
  Increments inc(grid, dim);
  for (std::size_t d = 0; d < dim; ++d) {
    fill_gaussian_row(seed, static_cast<std::uint32_t>(d), grid.dt(),
                      inc.row(d));
  }
  return inc;
}

/// Prefix sums of the increments, started at the origin.
inline Path build_bm_path(const TimeGrid &grid,
                          std::span<const double> increments) {
  if (increments.size() != grid.n_steps()) {
    throw std::invalid_argument("build_bm_path: expected " +
                                std::to_string(grid.n_steps()) +
                                " increments, got " +
                                std::to_string(increments.size()));
  }
  std::vector<double> v(grid.n_points());
  v[0] = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    v[k + 1] = v[k] + increments[k];
  }
  return Path(grid, std::move(v));
}

inline Path build_bm_path(const Increments &inc) {
  return build_bm_path(inc.grid(), inc.row(0));
}

} // namespace occudev

#endif // OCCUDEV_PATHS_HPP_
