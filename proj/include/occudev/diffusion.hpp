#ifndef OCCUDEV_DIFFUSION_HPP_
#define OCCUDEV_DIFFUSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "occudev/geometry.hpp"
#include "occudev/local_time.hpp"
#include "occudev/paths.hpp"
#include "occudev/rng.hpp"

namespace occudev {

/// zero: b^1 = 0. constant_H: b^1 frozen at H. exact_b1: b^1 and the
/// tangential coefficients evaluated from the metric at the current state.
enum class DriftMode { exact_b1, constant_H, zero };

inline std::string_view to_string(DriftMode m) {
  switch (m) {
  case DriftMode::exact_b1:
    return "exact_b1";
  case DriftMode::constant_H:
    return "constant_H";
  case DriftMode::zero:
    return "zero";
  }
  return "unknown";
}

inline DriftMode parse_drift_mode(std::string_view s) {
  if (s == "exact_b1") return DriftMode::exact_b1;
  if (s == "constant_H") return DriftMode::constant_H;
  if (s == "zero") return DriftMode::zero;
  throw std::invalid_argument("unknown drift_mode '" + std::string(s) + "'");
}

struct ScaledRunConfig {
  double t = 0.01;
  MetricSpec spec;
  DriftMode drift_mode = DriftMode::exact_b1;
  double alpha = 0.3; // diagnostic ball radius is t^alpha

  void validate() const {
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument("ScaledRunConfig: t must lie in (0, 1]");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) {
      throw std::invalid_argument("ScaledRunConfig: alpha must lie in (0, 1/2)");
    }
    spec.validate();
  }
};

/// Trajectory of the first coordinate of X^t and the exit time from the
/// ball of radius t^alpha (+inf if it stays inside on [0, 1]).
struct ScaledRun {
  Path x1;
  double tau = std::numeric_limits<double>::infinity();
  bool finite = true;

  bool exited() const { return tau <= 1.0; }
};

/// Fraction of grid points k >= 1 with value_k >= 0, times dt. The start
/// point sits on the hypersurface and is excluded.
inline double occupation_positive(std::span<const double> values, double dt) {
  std::size_t count = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] >= 0.0) ++count;
  }
  return dt * static_cast<double>(count);
}

inline double occupation_positive(const Path &path) {
  return occupation_positive(path.values(), path.grid().dt());
}

/// Euler scheme for the time-scaled process
///   X^{t,1}_s = sqrt(t) W_s + (t/2) int_0^s b^1(X^t_u) du,
///   dX~ = sqrt(t) sigma~ dW~ + (t/2) b~ ds,  sigma~ sigma~^T = (g^{-1})~,
/// driven by the rows of an increment block (row 0 is W).
class ScaledDiffusion {
public:
  explicit ScaledDiffusion(ScaledRunConfig cfg)
      : cfg_(std::move(cfg)), field_(make_field(cfg_)) {
    cfg_.validate();
    mean_curvature_ = cfg_.spec.mean_curvature();
  }

  const ScaledRunConfig &config() const { return cfg_; }
  double mean_curvature() const { return mean_curvature_; }
  std::size_t dimension() const { return static_cast<std::size_t>(cfg_.spec.dimension); }

  ScaledRun run(const Path &w, const Increments &inc) const {
    if (inc.grid() != w.grid()) {
      throw std::invalid_argument("ScaledDiffusion: path and increments differ in grid");
    }
    if (cfg_.drift_mode == DriftMode::exact_b1 && inc.dim() < dimension()) {
      throw std::invalid_argument("ScaledDiffusion: exact_b1 needs " +
                                  std::to_string(dimension()) + " increment rows");
    }
    return std::visit([&](const auto &field) { return run_with(field, w, inc); },
                      field_);
  }

private:
  using FieldVariant = std::variant<MetricField<2>, MetricField<3>, MetricField<4>,
                                    MetricField<Eigen::Dynamic>>;

  static FieldVariant make_field(const ScaledRunConfig &cfg) {
    cfg.spec.validate();
    return dispatch_dimension(cfg.spec.dimension, [&](auto d) -> FieldVariant {
      return MetricField<decltype(d)::value>(cfg.spec);
    });
  }

  template <int Dim>
  ScaledRun run_with(const MetricField<Dim> &field, const Path &w,
                     const Increments &inc) const {
    using Point = typename MetricField<Dim>::Point;
    using TanVector = typename MetricField<Dim>::TanVector;
    const TimeGrid &grid = w.grid();
    const std::size_t n = grid.n_steps();
    const int dim = static_cast<int>(dimension());
    const double sqrt_t = std::sqrt(cfg_.t);
    const double half_t = 0.5 * cfg_.t;
    const double dt = grid.dt();
    const double radius = std::pow(cfg_.t, cfg_.alpha);
    const double radius2 = radius * radius;
    const std::size_t tan_rows =
        std::min<std::size_t>(inc.dim() > 0 ? inc.dim() - 1 : 0,
                              static_cast<std::size_t>(dim - 1));

    std::vector<double> x1(grid.n_points());
    x1[0] = 0.0;
    double tau = std::numeric_limits<double>::infinity();
    bool finite = true;

    constexpr int kTanDim = MetricField<Dim>::kTanDim;
    std::vector<std::span<const double>> tan_increments;
    for (std::size_t r = 0; r < tan_rows; ++r) tan_increments.push_back(inc.row(r + 1));

    Point x = Point::Zero(dim);
    TanVector dw_tan = TanVector::Zero(dim - 1);
    auto tangential_part = [&]() {
      if constexpr (kTanDim == Eigen::Dynamic) {
        return x.tail(dim - 1);
      } else {
        return x.template tail<kTanDim>();
      }
    };
    double drift_integral = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t r = 0; r < tan_rows; ++r) {
        dw_tan[static_cast<Eigen::Index>(r)] = tan_increments[r][k];
      }
      double x1_next = 0.0;
      switch (cfg_.drift_mode) {
      case DriftMode::exact_b1: {
        const auto step = field.step_coefficients(x);
        const auto &coeffs = step.tangential;
        drift_integral += half_t * step.b1 * dt;
        x1_next = sqrt_t * w[k + 1] + drift_integral;
        tangential_part() += sqrt_t * (coeffs.sigma * dw_tan) + (half_t * dt) * coeffs.drift;
        break;
      }
      case DriftMode::constant_H:
        x1_next = sqrt_t * w[k + 1] + half_t * mean_curvature_ * grid.time(k + 1);
        tangential_part() += sqrt_t * dw_tan;
        break;
      case DriftMode::zero:
        x1_next = sqrt_t * w[k + 1];
        tangential_part() += sqrt_t * dw_tan;
        break;
      }
      x[0] = x1_next;
      x1[k + 1] = x1_next;
      const double r2 = x.squaredNorm();
      if (!std::isfinite(r2)) {
        finite = false;
        for (std::size_t j = k + 1; j < x1.size(); ++j) {
          x1[j] = std::numeric_limits<double>::quiet_NaN();
        }
        break;
      }
      if (tau > 1.0 && r2 > radius2) {
        tau = grid.time(k + 1);
      }
    }
    return ScaledRun{Path(grid, std::move(x1)), tau, finite};
  }

  ScaledRunConfig cfg_;
  FieldVariant field_;
  double mean_curvature_ = 0.0;
};

inline ScaledRun simulate_scaled(const Path &w, const Increments &inc,
                                 const ScaledRunConfig &cfg) {
  return ScaledDiffusion(cfg).run(w, inc);
}

/// One coupled replication at one time scale t. Every field is computed
/// from the same driving path W.
struct DeviationSample {
  double t = 0.0;
  double T_t = 0.0;      // occupation of X^{t,1} in [0, inf)
  double A1 = 0.0;       // occupation of W
  double A1_drift = 0.0; // occupation of W_u + sqrt(t) H u / 2
  double I_udL = 0.0;    // int_0^1 u dL_u^0 of W (Tanaka)
  double tau = std::numeric_limits<double>::infinity();
  bool exited = false;
  bool flagged = false; // numerical failure in this replication
  SeedSpec seed;

  /// T_t - A1 - (1/2) sqrt(t) H I_udL.
  double residual(double mean_curvature) const {
    return T_t - A1 - 0.5 * std::sqrt(t) * mean_curvature * I_udL;
  }
};

/// Draws one W per seed and runs X^t for every configured time scale.
class DeviationSampler {
public:
  DeviationSampler(TimeGrid grid, std::vector<ScaledRunConfig> configs)
      : grid_(grid) {
    if (configs.empty()) {
      throw std::invalid_argument("DeviationSampler: need at least one t");
    }
    diffusions_.reserve(configs.size());
    for (auto &cfg : configs) diffusions_.emplace_back(std::move(cfg));
    dim_ = diffusions_.front().dimension();
    for (const auto &d : diffusions_) {
      if (d.dimension() != dim_) {
        throw std::invalid_argument("DeviationSampler: configs disagree on dimension");
      }
    }
  }

  const TimeGrid &grid() const { return grid_; }
  std::size_t size() const { return diffusions_.size(); }
  const ScaledDiffusion &diffusion(std::size_t i) const { return diffusions_[i]; }

  std::vector<DeviationSample> sample(const SeedSpec &seed) const {
    const Increments inc = sample_increments(seed, grid_, dim_);
    return sample(seed, inc);
  }

  std::vector<DeviationSample> sample(const SeedSpec &seed, const Increments &inc) const {
    const Path w = build_bm_path(inc);
    const double dt = grid_.dt();
    const double a1 = occupation_positive(w);
    double i_udl = std::numeric_limits<double>::quiet_NaN();
    bool w_ok = w.all_finite();
    if (w_ok) {
      try {
        i_udl = integral_u_dL(w).value;
      } catch (const std::exception &) {
        w_ok = false;
      }
    }

    std::vector<DeviationSample> out;
    out.reserve(diffusions_.size());
    std::vector<double> shifted(grid_.n_points());
    for (const auto &diff : diffusions_) {
      DeviationSample s;
      s.seed = seed;
      s.t = diff.config().t;
      s.A1 = a1;
      s.I_udL = i_udl;
      const double shift = 0.5 * std::sqrt(s.t) * diff.mean_curvature();
      for (std::size_t k = 0; k < shifted.size(); ++k) {
        shifted[k] = w[k] + shift * grid_.time(k);
      }
      s.A1_drift = occupation_positive(shifted, dt);
      const ScaledRun run = diff.run(w, inc);
      s.tau = run.tau;
      s.exited = run.exited();
      s.flagged = !w_ok || !run.finite;
      s.T_t = run.finite ? occupation_positive(run.x1)
                         : std::numeric_limits<double>::quiet_NaN();
      out.push_back(s);
    }
    return out;
  }

private:
  TimeGrid grid_;
  std::vector<ScaledDiffusion> diffusions_;
  std::size_t dim_ = 1;
};

inline DeviationSample deviation_sample(const SeedSpec &seed, const ScaledRunConfig &cfg,
                                        const TimeGrid &grid) {
  return DeviationSampler(grid, {cfg}).sample(seed).front();
}

} // namespace occudev

#endif // OCCUDEV_DIFFUSION_HPP_
