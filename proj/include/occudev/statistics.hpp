#ifndef OCCUDEV_STATISTICS_HPP_
#define OCCUDEV_STATISTICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "occudev/diffusion.hpp"

namespace occudev {

/// E int_0^1 u dL_u = (2/3) sqrt(1 / (2 pi)).
inline constexpr double kMeanUdL = 2.0 / 3.0 / 2.5066282746310002; // sqrt(2 pi)

/// (1/3) sqrt(1 / (2 pi)): size of the sqrt(t) term of the weak expansion per
/// unit mean curvature.
inline constexpr double kWeakCoefficient = 0.5 * kMeanUdL;

/// CDF of the arcsine law on [0, 1].
inline double arcsine_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 2.0 / std::numbers::pi * std::asin(std::sqrt(x));
}

/// CDF of |N(0, 1)|.
inline double half_normal_cdf(double x) {
  return x <= 0.0 ? 0.0 : std::erf(x / std::numbers::sqrt2);
}

enum class KSReference { arcsine, half_normal, empirical };

inline std::string_view to_string(KSReference r) {
  switch (r) {
  case KSReference::arcsine:
    return "arcsine";
  case KSReference::half_normal:
    return "half_normal";
  case KSReference::empirical:
    return "empirical";
  }
  return "unknown";
}

struct KSReport {
  double statistic = 0.0;
  std::size_t n = 0;
  KSReference reference = KSReference::arcsine;
};

namespace detail {

inline std::vector<double> sorted_finite(std::span<const double> samples,
                                         const char *who) {
  std::vector<double> v(samples.begin(), samples.end());
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(who) + ": non-finite sample");
    }
  }
  std::sort(v.begin(), v.end());
  return v;
}

} // namespace detail

/// Exact sup-distance between the empirical CDF and a reference CDF.
inline KSReport ks_against(std::span<const double> samples, KSReference reference) {
  if (samples.size() < 10) {
    throw std::invalid_argument("ks_against: need at least 10 samples");
  }
  if (reference == KSReference::empirical) {
    throw std::invalid_argument("ks_against: use ks_two_sample for empirical references");
  }
  const auto v = detail::sorted_finite(samples, "ks_against");
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = reference == KSReference::arcsine ? arcsine_cdf(v[i])
                                                       : half_normal_cdf(v[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, f - di / n, (di + 1.0) / n - f});
  }
  return {d, v.size(), reference};
}

/// Sup-distance between two empirical CDFs.
inline KSReport ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 10 || b.size() < 10) {
    throw std::invalid_argument("ks_two_sample: need at least 10 samples per side");
  }
  const auto x = detail::sorted_finite(a, "ks_two_sample");
  const auto y = detail::sorted_finite(b, "ks_two_sample");
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return {d, std::min(x.size(), y.size()), KSReference::empirical};
}

/// Running mean and variance with Neumaier-compensated sums; the result
/// depends only on the order of the values fed in.
class MeanAccumulator {
public:
  void add(double x) {
    ++n_;
    add_compensated(sum_, comp_, x);
    add_compensated(sum_sq_, comp_sq_, x * x);
  }

  std::size_t count() const { return n_; }
  double mean() const { return n_ ? (sum_ + comp_) / static_cast<double>(n_) : 0.0; }
  double variance() const {
    if (n_ < 2) return 0.0;
    const double n = static_cast<double>(n_);
    const double m = mean();
    return std::max(0.0, ((sum_sq_ + comp_sq_) - n * m * m) / (n - 1.0));
  }
  double standard_error() const {
    return n_ ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

private:
  static void add_compensated(double &sum, double &comp, double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  std::size_t n_ = 0;
  double sum_ = 0.0;
  double comp_ = 0.0;
  double sum_sq_ = 0.0;
  double comp_sq_ = 0.0;
};

inline double mean_of(std::span<const double> v) {
  MeanAccumulator acc;
  for (double x : v) acc.add(x);
  return acc.mean();
}

/// Generalized least squares for y = X beta with error covariance `cov`.
/// Falls back to ordinary least squares when the covariance is degenerate.
struct LinearFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;
};

inline LinearFit gls_fit(const Eigen::MatrixXd &design, const Eigen::VectorXd &y,
                         const Eigen::MatrixXd &cov) {
  const Eigen::Index p = design.cols();
  const double scale = cov.diagonal().cwiseAbs().maxCoeff();
  LinearFit fit;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    const Eigen::MatrixXd xtx = design.transpose() * design;
    fit.beta = xtx.ldlt().solve(design.transpose() * y);
    fit.beta_cov = Eigen::MatrixXd::Zero(p, p);
    return fit;
  }
  const Eigen::MatrixXd reg =
      cov + 1e-12 * scale * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  // Whiten with the Cholesky factor, then solve by QR: strongly correlated
  // paired batches make the normal equations badly conditioned.
  const Eigen::LLT<Eigen::MatrixXd> chol(reg);
  const Eigen::MatrixXd xw = chol.matrixL().solve(design);
  const Eigen::VectorXd yw = chol.matrixL().solve(y);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(xw);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * yw).head(p);
  fit.beta = r.triangularView<Eigen::Upper>().solve(qty);
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  fit.beta_cov = r_inv * r_inv.transpose();
  return fit;
}

/// Least-squares slope of log(values) against log(ts).
inline double fit_power_law(std::span<const double> ts, std::span<const double> values) {
  if (ts.size() != values.size() || ts.size() < 2) {
    throw std::invalid_argument("fit_power_law: need matching inputs of size >= 2");
  }
  const auto n = static_cast<Eigen::Index>(ts.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(ts[i] > 0.0) || !(values[i] > 0.0)) {
      throw std::domain_error("fit_power_law: inputs must be positive");
    }
    design(i, 0) = 1.0;
    design(i, 1) = std::log(ts[i]);
    y[i] = std::log(values[i]);
  }
  return gls_fit(design, y, Eigen::MatrixXd::Zero(n, n)).beta[1];
}

/// All coupled samples at one time scale.
struct SampleBatch {
  double t = 0.0;
  std::vector<DeviationSample> samples;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct PerTStatistics {
  double t = 0.0;
  std::size_t n = 0;
  std::size_t flagged = 0;
  double mean_dev_over_sqrt_t = 0.0; // mean of (T_t - A1) / sqrt(t)
  double stderr_dev = 0.0;
  double paired_mean = 0.0;          // mean of (T_t - A1 - sqrt(t) H I / 2) / sqrt(t)
  double paired_stderr = 0.0;
  double raw_mean_over_sqrt_t = 0.0; // (mean T_t - 1/2) / sqrt(t), unpaired
  double raw_stderr = 0.0;
  double residual_l1 = 0.0;          // E|T_t - A1 - sqrt(t) H I / 2|
  double residual_l2 = 0.0;          // (E|...|^2)^(1/2)
  double exit_fraction = 0.0;
};

struct ExponentFit {
  int p = 1;
  double exponent = 0.0;
  Interval ci;
};

struct SweepResult {
  double mean_curvature = 0.0;
  std::vector<PerTStatistics> per_t; // t strictly decreasing
  double fitted_coefficient = 0.0;   // extrapolated paired estimator
  Interval coefficient_ci;
  double raw_fitted_coefficient = 0.0;
  Interval raw_coefficient_ci;
  double mean_prediction = 0.0;      // H E[I_udL] / 2 from the same samples
  double mean_prediction_stderr = 0.0;
  ExponentFit remainder_l1;
  ExponentFit remainder_l2;
};

namespace detail {

inline constexpr double kZ95 = 1.959963984540054;

inline std::vector<const SampleBatch *> sorted_batches(std::span<const SampleBatch> batches,
                                                       const char *who) {
  std::vector<const SampleBatch *> out;
  for (const auto &b : batches) out.push_back(&b);
  std::sort(out.begin(), out.end(),
            [](const SampleBatch *a, const SampleBatch *b) { return a->t > b->t; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i]->samples.empty()) {
      throw std::invalid_argument(std::string(who) + ": empty batch at t = " +
                                  std::to_string(out[i]->t));
    }
    if (!(out[i]->t > 0.0)) {
      throw std::invalid_argument(std::string(who) + ": t must be positive");
    }
    if (i > 0 && !(out[i]->t < out[i - 1]->t)) {
      throw std::invalid_argument(std::string(who) + ": duplicate t value");
    }
  }
  if (out.size() < 3) {
    throw std::invalid_argument(std::string(who) + ": need at least 3 distinct t values");
  }
  return out;
}

/// Batches are paired when every batch holds the same replicates in the
/// same order (one W drives every t).
inline bool batches_paired(const std::vector<const SampleBatch *> &batches) {
  const auto &first = batches.front()->samples;
  for (const auto *b : batches) {
    if (b->samples.size() != first.size()) return false;
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (!(b->samples[i].seed == first[i].seed)) return false;
    }
  }
  return true;
}

/// Per-sample values f(sample, batch index) for the unflagged replicates,
/// and the covariance of their batch means. Flagged replicates are dropped
/// from every batch so paired covariances stay aligned.
template <typename F>
void batch_means(const std::vector<const SampleBatch *> &batches, F &&f,
                 Eigen::VectorXd &means, Eigen::MatrixXd &cov) {
  const auto m = static_cast<Eigen::Index>(batches.size());
  means = Eigen::VectorXd::Zero(m);
  cov = Eigen::MatrixXd::Zero(m, m);
  if (batches_paired(batches)) {
    const std::size_t n = batches.front()->samples.size();
    std::vector<bool> keep(n, true);
    for (const auto *b : batches) {
      for (std::size_t i = 0; i < n; ++i) {
        if (b->samples[i].flagged) keep[i] = false;
      }
    }
    std::vector<MeanAccumulator> acc(static_cast<std::size_t>(m));
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      ++kept;
      for (Eigen::Index j = 0; j < m; ++j) {
        acc[static_cast<std::size_t>(j)].add(
            f(batches[static_cast<std::size_t>(j)]->samples[i], j));
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) means[j] = acc[static_cast<std::size_t>(j)].mean();
    if (kept < 2) return;
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      Eigen::VectorXd d(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        d[j] = f(batches[static_cast<std::size_t>(j)]->samples[i], j) - means[j];
      }
      cov.noalias() += d * d.transpose();
    }
    const double nk = static_cast<double>(kept);
    cov /= nk * (nk - 1.0);
    return;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    MeanAccumulator acc;
    for (const auto &s : batches[static_cast<std::size_t>(j)]->samples) {
      if (!s.flagged) acc.add(f(s, j));
    }
    means[j] = acc.mean();
    cov(j, j) = acc.standard_error() * acc.standard_error();
  }
}

/// y(t) = a + b t^{1/4}; returns (a, CI for a).
inline std::pair<double, Interval> extrapolate_to_zero(std::span<const double> ts,
                                                       const Eigen::VectorXd &y,
                                                       const Eigen::MatrixXd &cov) {
  const auto m = static_cast<Eigen::Index>(ts.size());
  Eigen::MatrixXd design(m, 2);
  for (Eigen::Index j = 0; j < m; ++j) {
    design(j, 0) = 1.0;
    design(j, 1) = std::pow(ts[static_cast<std::size_t>(j)], 0.25);
  }
  const LinearFit fit = gls_fit(design, y, cov);
  const double a = fit.beta[0];
  const double half = kZ95 * std::sqrt(std::max(0.0, fit.beta_cov(0, 0)));
  return {a, Interval{a - half, a + half}};
}

} // namespace detail

/// Remainder-rate regression: slope of log ||T_t - A1 - sqrt(t) H I / 2||_p
/// against log t, p in {1, 2}.
inline ExponentFit fit_remainder_exponent(std::span<const SampleBatch> batches,
                                          double mean_curvature, int p) {
  if (p != 1 && p != 2) {
    throw std::invalid_argument("fit_remainder_exponent: p must be 1 or 2");
  }
  const auto sorted = detail::sorted_batches(batches, "fit_remainder_exponent");
  Eigen::VectorXd moments;
  Eigen::MatrixXd cov;
  detail::batch_means(
      sorted,
      [&](const DeviationSample &s, Eigen::Index) {
        const double r = std::abs(s.residual(mean_curvature));
        return p == 1 ? r : r * r;
      },
      moments, cov);
  const auto m = static_cast<Eigen::Index>(sorted.size());
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd y(m);
  Eigen::VectorXd grad(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(moments[j] > 0.0) || !std::isfinite(moments[j])) {
      throw std::domain_error("fit_remainder_exponent: residual moment underflowed at t = " +
                              std::to_string(sorted[static_cast<std::size_t>(j)]->t));
    }
    design(j, 0) = 1.0;
    design(j, 1) = std::log(sorted[static_cast<std::size_t>(j)]->t);
    y[j] = std::log(moments[j]) / p;
    grad[j] = 1.0 / (p * moments[j]);
  }
  // Delta method: log of the p-th root of a mean.
  const Eigen::MatrixXd log_cov = grad.asDiagonal() * cov * grad.asDiagonal();
  const LinearFit fit = gls_fit(design, y, log_cov);
  ExponentFit out;
  out.p = p;
  out.exponent = fit.beta[1];
  const double half = detail::kZ95 * std::sqrt(std::max(0.0, fit.beta_cov(1, 1)));
  out.ci = {out.exponent - half, out.exponent + half};
  return out;
}

/// Per-t aggregates, extrapolated sqrt(t) coefficient and remainder rates.
inline SweepResult fit_deviation_coefficient(std::span<const SampleBatch> batches,
                                             double mean_curvature) {
  const auto sorted = detail::sorted_batches(batches, "fit_deviation_coefficient");
  SweepResult out;
  out.mean_curvature = mean_curvature;
  std::vector<double> ts;
  for (const auto *b : sorted) {
    ts.push_back(b->t);
    PerTStatistics st;
    st.t = b->t;
    const double sqrt_t = std::sqrt(b->t);
    MeanAccumulator dev, paired, raw, l1, l2;
    std::size_t exits = 0;
    for (const auto &s : b->samples) {
      if (s.flagged) {
        ++st.flagged;
        continue;
      }
      const double r = s.residual(mean_curvature);
      dev.add((s.T_t - s.A1) / sqrt_t);
      paired.add(r / sqrt_t);
      raw.add(s.T_t);
      l1.add(std::abs(r));
      l2.add(r * r);
      if (s.exited) ++exits;
    }
    st.n = dev.count();
    st.mean_dev_over_sqrt_t = dev.mean();
    st.stderr_dev = dev.standard_error();
    st.paired_mean = paired.mean();
    st.paired_stderr = paired.standard_error();
    st.raw_mean_over_sqrt_t = (raw.mean() - 0.5) / sqrt_t;
    st.raw_stderr = raw.standard_error() / sqrt_t;
    st.residual_l1 = l1.mean();
    st.residual_l2 = std::sqrt(l2.mean());
    st.exit_fraction =
        st.n ? static_cast<double>(exits) / static_cast<double>(st.n) : 0.0;
    out.per_t.push_back(st);
  }

  Eigen::VectorXd y;
  Eigen::MatrixXd cov;
  detail::batch_means(
      sorted,
      [&](const DeviationSample &s, Eigen::Index) { return (s.T_t - s.A1) / std::sqrt(s.t); },
      y, cov);
  std::tie(out.fitted_coefficient, out.coefficient_ci) =
      detail::extrapolate_to_zero(ts, y, cov);

  detail::batch_means(
      sorted,
      [&](const DeviationSample &s, Eigen::Index) { return (s.T_t - 0.5) / std::sqrt(s.t); },
      y, cov);
  std::tie(out.raw_fitted_coefficient, out.raw_coefficient_ci) =
      detail::extrapolate_to_zero(ts, y, cov);

  MeanAccumulator pred;
  for (const auto &s : sorted.back()->samples) {
    if (!s.flagged) pred.add(0.5 * mean_curvature * s.I_udL);
  }
  out.mean_prediction = pred.mean();
  out.mean_prediction_stderr = pred.standard_error();

  // Exactly coupled runs (flat metric or zero drift) have no remainder to fit.
  const bool exact = std::all_of(out.per_t.begin(), out.per_t.end(),
                                 [](const PerTStatistics &st) { return st.residual_l1 == 0.0; });
  if (exact) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.remainder_l1 = {1, nan, {nan, nan}};
    out.remainder_l2 = {2, nan, {nan, nan}};
    return out;
  }
  out.remainder_l1 = fit_remainder_exponent(batches, mean_curvature, 1);
  out.remainder_l2 = fit_remainder_exponent(batches, mean_curvature, 2);
  return out;
}

/// Test function for the weak expansion; derivative_at_zero must equal
/// phi'(0).
struct TestFunction {
  std::string name;
  std::function<double(double)> phi;
  double derivative_at_zero = 0.0;
  std::function<double(double)> derivative;
};

inline TestFunction test_function(std::string_view name) {
  if (name == "one") return {"one", [](double) { return 1.0; }, 0.0, [](double) { return 0.0; }};
  if (name == "identity") {
    return {"identity", [](double x) { return x; }, 1.0, [](double) { return 1.0; }};
  }
  if (name == "shifted_square") {
    return {"shifted_square", [](double x) { return (x - 1.0) * (x - 1.0); }, -2.0,
            [](double x) { return 2.0 * (x - 1.0); }};
  }
  throw std::invalid_argument("unknown test function '" + std::string(name) + "'");
}

/// E phi under the arcsine law, via x = sin^2(theta):
///   int phi(x) / (pi sqrt(x (1 - x))) dx = (2 / pi) int_0^{pi/2} phi(sin^2 theta) dtheta.
inline double arcsine_expectation(const std::function<double(double)> &phi) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double theta) {
            const double s = std::sin(theta);
            return phi(s * s);
          },
          0.0, std::numbers::pi / 2.0, 15, 1e-12, &error) *
      2.0 / std::numbers::pi;
  if (!std::isfinite(value)) {
    throw std::runtime_error("arcsine_expectation: non-finite integral");
  }
  return value;
}

/// Predicted sqrt(t)-slope of E phi(T_t) - E_mu0 phi. The dipole mu_1 is
/// taken to act as phi -> phi'(0), the sign under which the weak statement
/// agrees with the pathwise expansion for phi(x) = x.
inline double weak_expansion_prediction(double mean_curvature, double derivative_at_zero) {
  return kWeakCoefficient * mean_curvature * derivative_at_zero;
}

struct WeakExpansionPerT {
  double t = 0.0;
  std::size_t n = 0;
  double mean_phi = 0.0;
  double raw_slope = 0.0;    // (mean phi(T_t) - E_mu0 phi) / sqrt(t)
  double raw_stderr = 0.0;
  double paired_slope = 0.0; // mean (phi(T_t) - phi(A1)) / sqrt(t)
  double paired_stderr = 0.0;
};

struct WeakExpansionReport {
  std::string phi_name;
  double mu0_expectation = 0.0;
  std::vector<WeakExpansionPerT> per_t;
  double fitted_slope = 0.0; // paired estimator extrapolated to t = 0
  Interval slope_ci;
  double raw_fitted_slope = 0.0;
  Interval raw_slope_ci;
  double predicted_slope = 0.0;
  // H E[phi'(A1) I_udL] / 2 at the smallest t: the first-order term implied by
  // the pathwise expansion, without reducing it to phi'(0).
  double pathwise_slope = 0.0;
  double pathwise_stderr = 0.0;
};

inline WeakExpansionReport weak_expansion_check(const TestFunction &phi,
                                                std::span<const SampleBatch> batches,
                                                double mean_curvature) {
  const auto sorted = detail::sorted_batches(batches, "weak_expansion_check");
  WeakExpansionReport out;
  out.phi_name = phi.name;
  out.mu0_expectation = arcsine_expectation(phi.phi);
  out.predicted_slope = weak_expansion_prediction(mean_curvature, phi.derivative_at_zero);
  std::vector<double> ts;
  for (const auto *b : sorted) {
    ts.push_back(b->t);
    const double sqrt_t = std::sqrt(b->t);
    MeanAccumulator raw, paired;
    for (const auto &s : b->samples) {
      if (s.flagged) continue;
      const double ft = phi.phi(s.T_t);
      raw.add(ft);
      paired.add((ft - phi.phi(s.A1)) / sqrt_t);
    }
    WeakExpansionPerT st;
    st.t = b->t;
    st.n = raw.count();
    st.mean_phi = raw.mean();
    st.raw_slope = (raw.mean() - out.mu0_expectation) / sqrt_t;
    st.raw_stderr = raw.standard_error() / sqrt_t;
    st.paired_slope = paired.mean();
    st.paired_stderr = paired.standard_error();
    out.per_t.push_back(st);
  }
  Eigen::VectorXd y;
  Eigen::MatrixXd cov;
  detail::batch_means(
      sorted,
      [&](const DeviationSample &s, Eigen::Index) {
        return (phi.phi(s.T_t) - phi.phi(s.A1)) / std::sqrt(s.t);
      },
      y, cov);
  std::tie(out.fitted_slope, out.slope_ci) = detail::extrapolate_to_zero(ts, y, cov);
  detail::batch_means(
      sorted,
      [&](const DeviationSample &s, Eigen::Index) {
        return (phi.phi(s.T_t) - out.mu0_expectation) / std::sqrt(s.t);
      },
      y, cov);
  std::tie(out.raw_fitted_slope, out.raw_slope_ci) = detail::extrapolate_to_zero(ts, y, cov);
  if (phi.derivative) {
    MeanAccumulator path;
    for (const auto &s : sorted.back()->samples) {
      if (!s.flagged) path.add(0.5 * mean_curvature * phi.derivative(s.A1) * s.I_udL);
    }
    out.pathwise_slope = path.mean();
    out.pathwise_stderr = path.standard_error();
  }
  return out;
}

} // namespace occudev

#endif // OCCUDEV_STATISTICS_HPP_
