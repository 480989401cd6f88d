#ifndef OCCUDEV_LOCAL_TIME_HPP_
#define OCCUDEV_LOCAL_TIME_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "occudev/paths.hpp"

namespace occudev {

enum class LocalTimeMethod { tanaka, interval, downcrossing };

inline std::string_view to_string(LocalTimeMethod m) {
  switch (m) {
  case LocalTimeMethod::tanaka:
    return "tanaka";
  case LocalTimeMethod::interval:
    return "interval";
  case LocalTimeMethod::downcrossing:
    return "downcrossing";
  }
  return "unknown";
}

/// Estimate of s -> L_s^x at a single level, sampled at grid indices.
struct LocalTimeCurve {
  double level = 0.0;
  LocalTimeMethod method = LocalTimeMethod::tanaka;
  double bandwidth = 0.0;            // unused by tanaka
  std::vector<std::size_t> indices;  // grid indices of the evaluation times
  std::vector<double> values;        // L at those indices, non-decreasing
  double max_violation = 0.0;        // largest pre-clamp decrease
  bool starved = false;              // bandwidth below sqrt(dt)/10

  double final_value() const { return values.empty() ? 0.0 : values.back(); }
};

/// L_s^x on a (level x time) grid.
struct LocalTimeProfile {
  std::vector<double> levels;
  std::vector<std::size_t> indices;
  std::vector<std::vector<double>> values; // values[level][time]
  LocalTimeMethod method = LocalTimeMethod::tanaka;
  double bandwidth = 0.0;
};

namespace detail {

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline std::vector<std::size_t> resolve_times(const TimeGrid &grid,
                                              std::span<const double> times) {
  std::vector<std::size_t> idx;
  if (times.empty()) {
    idx.resize(grid.n_points());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    return idx;
  }
  idx.reserve(times.size());
  for (double s : times) idx.push_back(grid.index_at(s));
  return idx;
}

/// Running-maximum clamp; returns the largest decrease that was removed.
inline double clamp_monotone(std::vector<double> &full) {
  double running = full.empty() ? 0.0 : full[0];
  double violation = 0.0;
  for (double &v : full) {
    if (v < running) {
      violation = std::max(violation, running - v);
      v = running;
    } else {
      running = v;
    }
  }
  return violation;
}

inline LocalTimeCurve sample_curve(std::vector<double> full, double level,
                                   LocalTimeMethod method, double bandwidth,
                                   const TimeGrid &grid,
                                   std::span<const double> times) {
  LocalTimeCurve c;
  c.level = level;
  c.method = method;
  c.bandwidth = bandwidth;
  c.max_violation = clamp_monotone(full);
  c.indices = resolve_times(grid, times);
  c.values.reserve(c.indices.size());
  for (std::size_t k : c.indices) c.values.push_back(full[k]);
  return c;
}

inline void require_bandwidth(double eps, const char *who) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument(std::string(who) + ": bandwidth must be positive");
  }
}

} // namespace detail

/// Full-grid discrete Tanaka local time before clamping:
///   L_k = |W_k - x| - |W_0 - x| - sum_{j<k} sgn(W_j - x)(W_{j+1} - W_j),
/// with sgn(0) = 0.
inline std::vector<double> tanaka_raw(const Path &path, double x) {
  const auto w = path.values();
  std::vector<double> out(w.size());
  const double a0 = std::abs(w[0] - x);
  double stochastic = 0.0;
  out[0] = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    stochastic += detail::sgn(w[k] - x) * (w[k + 1] - w[k]);
    out[k + 1] = std::abs(w[k + 1] - x) - a0 - stochastic;
  }
  return out;
}

/// Tanaka estimator; `times` empty means every grid point.
inline LocalTimeCurve local_time_tanaka(const Path &path, double x,
                                        std::span<const double> times = {}) {
  return detail::sample_curve(tanaka_raw(path, x), x, LocalTimeMethod::tanaka,
                              0.0, path.grid(), times);
}

/// Occupation-density estimator (dt / 2 eps) #{k : s_k < s, |W_k - x| < eps}.
inline LocalTimeCurve local_time_interval(const Path &path, double x, double eps,
                                          std::span<const double> times = {}) {
  detail::require_bandwidth(eps, "local_time_interval");
  const auto w = path.values();
  const double dt = path.grid().dt();
  const double weight = dt / (2.0 * eps);
  std::vector<double> full(w.size());
  std::size_t count = 0;
  full[0] = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    if (std::abs(w[k] - x) < eps) ++count;
    full[k + 1] = weight * static_cast<double>(count);
  }
  auto c = detail::sample_curve(std::move(full), x, LocalTimeMethod::interval, eps,
                                path.grid(), times);
  c.starved = eps < std::sqrt(dt) / 10.0;
  return c;
}

/// Down-crossing estimator 2 eps D_eps(s), where D_eps counts completed
/// passages from >= x + eps down to <= x.
inline LocalTimeCurve local_time_downcrossing(const Path &path, double x,
                                              double eps,
                                              std::span<const double> times = {}) {
  detail::require_bandwidth(eps, "local_time_downcrossing");
  const auto w = path.values();
  std::vector<double> full(w.size());
  bool armed = w[0] >= x + eps;
  std::size_t crossings = 0;
  full[0] = 0.0;
  for (std::size_t k = 1; k < w.size(); ++k) {
    if (armed && w[k] <= x) {
      ++crossings;
      armed = false;
    } else if (!armed && w[k] >= x + eps) {
      armed = true;
    }
    full[k] = 2.0 * eps * static_cast<double>(crossings);
  }
  auto c = detail::sample_curve(std::move(full), x, LocalTimeMethod::downcrossing,
                                eps, path.grid(), times);
  c.starved = eps < std::sqrt(path.grid().dt()) / 10.0;
  return c;
}

inline LocalTimeCurve local_time(const Path &path, double x, LocalTimeMethod method,
                                 double eps, std::span<const double> times = {}) {
  switch (method) {
  case LocalTimeMethod::tanaka:
    return local_time_tanaka(path, x, times);
  case LocalTimeMethod::interval:
    return local_time_interval(path, x, eps, times);
  case LocalTimeMethod::downcrossing:
    return local_time_downcrossing(path, x, eps, times);
  }
  throw std::invalid_argument("local_time: unknown method");
}

inline LocalTimeProfile local_time_profile(const Path &path,
                                           std::span<const double> levels,
                                           LocalTimeMethod method, double eps,
                                           std::span<const double> times = {}) {
  LocalTimeProfile p;
  p.levels.assign(levels.begin(), levels.end());
  p.indices = detail::resolve_times(path.grid(), times);
  p.method = method;
  p.bandwidth = method == LocalTimeMethod::tanaka ? 0.0 : eps;
  p.values.reserve(levels.size());
  for (double x : levels) {
    p.values.push_back(local_time(path, x, method, eps, times).values);
  }
  return p;
}

/// The functional int_0^1 u dL_u through two discretizations.
struct UdLIntegral {
  double value = 0.0;     // L_1 - int_0^1 L_u du, trapezoid rule
  double stieltjes = 0.0; // sum_k u_k (L_{k+1} - L_k)
};

/// Requires a curve sampled at every grid point. Throws std::domain_error if
/// the curve decreases beyond rounding and std::logic_error if the two
/// discretizations disagree by more than 1e-8 + 2 dt L_1.
inline UdLIntegral integral_u_dL(const LocalTimeCurve &curve, const TimeGrid &grid) {
  const auto &L = curve.values;
  if (L.size() != grid.n_points() || curve.indices.size() != grid.n_points()) {
    throw std::invalid_argument(
        "integral_u_dL: local time curve must cover the full time grid");
  }
  const double scale = 1.0 + std::abs(L.back());
  for (std::size_t k = 0; k + 1 < L.size(); ++k) {
    if (L[k + 1] < L[k] - 1e-12 * scale) {
      throw std::domain_error("integral_u_dL: local time curve is not monotone");
    }
  }
  const double dt = grid.dt();
  double trap = 0.5 * (L.front() + L.back());
  double stieltjes = 0.0;
  for (std::size_t k = 1; k + 1 < L.size(); ++k) trap += L[k];
  for (std::size_t k = 0; k + 1 < L.size(); ++k) {
    stieltjes += grid.time(k) * (L[k + 1] - L[k]);
  }
  const UdLIntegral out{L.back() - dt * trap, stieltjes};
  if (std::abs(out.stieltjes - out.value) > 1e-8 + 2.0 * dt * std::abs(L.back())) {
    throw std::logic_error("integral_u_dL: Stieltjes sum and L_1 - int L du disagree");
  }
  return out;
}

/// int_0^1 u dL_u^0 from the Tanaka estimator.
inline UdLIntegral integral_u_dL(const Path &path) {
  return integral_u_dL(local_time_tanaka(path, 0.0), path.grid());
}

/// Uniform level grid covering [lo, hi] with spacing dx.
inline std::vector<double> uniform_levels(double lo, double hi, double dx) {
  if (!(dx > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("uniform_levels: need dx > 0 and hi >= lo");
  }
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / dx)) + 1;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = lo + dx * static_cast<double>(j);
  return v;
}

/// Both sides of the occupation-time formula for one path.
struct OccupationFormulaSides {
  double time_integral = 0.0;  // int_0^1 Psi(W_s, s) ds
  double level_integral = 0.0; // int dx int_0^1 Psi(x, s) dL_s^x
  double residual() const { return std::abs(time_integral - level_integral); }
};

/// Evaluates both sides with left-point sums in time and the interval
/// estimator on a uniform level grid (spacing dx, must cover the path).
template <typename Psi>
OccupationFormulaSides occupation_formula_sides(const Path &path, Psi &&psi,
                                                std::span<const double> levels,
                                                double eps) {
  detail::require_bandwidth(eps, "occupation_formula_residual");
  if (levels.size() < 2) {
    throw std::invalid_argument("occupation_formula_residual: need at least two levels");
  }
  const double x0 = levels.front();
  const double dx = levels[1] - levels[0];
  const auto w = path.values();
  const double dt = path.grid().dt();
  const auto n_levels = static_cast<long>(levels.size());

  OccupationFormulaSides sides;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double s = path.grid().time(k);
    sides.time_integral += psi(w[k], s);
    // Levels with |W_k - x_j| < eps receive dL = dt / (2 eps) at time s_k.
    const long j_lo = std::max(0L, static_cast<long>(std::ceil((w[k] - eps - x0) / dx)));
    const long j_hi =
        std::min(n_levels - 1, static_cast<long>(std::floor((w[k] + eps - x0) / dx)));
    double level_sum = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) {
      const double x = levels[static_cast<std::size_t>(j)];
      if (std::abs(w[k] - x) < eps) level_sum += psi(x, s);
    }
    sides.level_integral += level_sum;
  }
  sides.time_integral *= dt;
  sides.level_integral *= dx * dt / (2.0 * eps);
  return sides;
}

template <typename Psi>
double occupation_formula_residual(const Path &path, Psi &&psi,
                                   std::span<const double> levels, double eps) {
  return occupation_formula_sides(path, std::forward<Psi>(psi), levels, eps)
      .residual();
}

/// Level grid used by default for the residual: spacing eps / 10, padded by
/// 2 eps around the range of the path.
inline std::vector<double> default_levels(const Path &path, double eps) {
  const auto [lo, hi] = std::minmax_element(path.values().begin(), path.values().end());
  return uniform_levels(*lo - 2.0 * eps, *hi + 2.0 * eps, eps / 10.0);
}

} // namespace occudev

#endif // OCCUDEV_LOCAL_TIME_HPP_
