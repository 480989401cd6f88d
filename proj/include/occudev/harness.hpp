#ifndef OCCUDEV_HARNESS_HPP_
#define OCCUDEV_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <nlohmann/json.hpp>

#include "occudev/config.hpp"
#include "occudev/diffusion.hpp"
#include "occudev/local_time.hpp"
#include "occudev/paths.hpp"
#include "occudev/rng.hpp"
#include "occudev/statistics.hpp"

namespace occudev {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitAssertion = 4,
};

/// Built-in tolerances. Statistical checks use max(fixed, floor), where the
/// floor is kFloorZ standard errors (or the 99.9% KS quantile), so small
/// desk runs are judged on noise and full-size runs on the fixed value.
struct Tolerance {
  std::string_view key;
  double value;
  std::string_view meaning;
};

inline constexpr std::string_view kToleranceVersion = "occudev-tolerances/1";
inline constexpr double kFloorZ = 4.0;
inline constexpr double kKsQuantile = 1.95; // sqrt(N) KS at level 0.001

inline constexpr Tolerance kTolerances[] = {
    {"arcsine.ks", 0.01, "KS distance of A1 to the arcsine CDF"},
    {"local_time.tanaka_rel", 0.02, "relative error of mean Tanaka L_1"},
    {"local_time.interval_rel", 0.03, "relative error of mean interval L_1"},
    {"local_time.downcrossing_rel", 0.05, "relative error of mean downcrossing L_1"},
    {"local_time.cross_abs", 0.05, "mean |L_1(method) - L_1(tanaka)|"},
    {"local_time.udl_rel", 0.02, "relative error of mean int u dL_u"},
    {"local_time.ks_abs_w", 0.015, "two-sample KS of L_1 against |W_1|"},
    {"local_time.violation", 3.0, "mean pre-clamp violation in units of sqrt(dt)"},
    {"sweep.coefficient_rel", 0.15, "relative error of the extrapolated coefficient"},
    {"sweep.remainder_slope_halfwidth", 0.15, "|remainder slope - 0.75|"},
    {"sweep.paired_se", 3.0, "|paired mean| at the smallest t in standard errors"},
    {"weak.slope_rel", 0.20, "relative error of the extrapolated weak slope"},
    {"occupation.zero", 1e-12, "mean residual for Psi = 0"},
    {"occupation.indicator", 0.02, "mean residual for Psi = 1{x >= 0}"},
    {"occupation.shifted", 0.03, "mean residual for Psi = 1{x + c s >= 0}"},
};

inline double tolerance(std::string_view key) {
  for (const auto &t : kTolerances) {
    if (t.key == key) return t.value;
  }
  throw std::logic_error("unknown tolerance key " + std::string(key));
}

/// One built-in assertion, always phrased as value <= threshold.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

inline Check make_check(std::string name, double value, double threshold,
                        std::string detail = {}) {
  const bool ok = std::isfinite(value) && value <= threshold;
  return {std::move(name), value, threshold, ok, std::move(detail)};
}

struct ExperimentResult {
  std::string experiment;
  std::string csv;
  nlohmann::json json;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::size_t flagged = 0;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.passed; });
  }
  int exit_code() const {
    if (flagged > 0) return kExitNumerical;
    return all_passed() ? kExitOk : kExitAssertion;
  }
};

/// %.17g, with nan and inf spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 0 falls back to OCCUDEV_THREADS, then to the hardware concurrency.
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char *env = std::getenv("OCCUDEV_THREADS")) {
    char *end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Thread-safe progress lines at every 10% of the replications.
class Progress {
public:
  Progress(std::ostream *out, std::string label, std::size_t total)
      : out_(out), label_(std::move(label)), total_(total) {}

  void tick() {
    if (!out_ || total_ == 0) return;
    const std::size_t done = ++done_;
    if (done * 10 / total_ != (done - 1) * 10 / total_) {
      const std::lock_guard lock(mutex_);
      *out_ << label_ << ": " << done << "/" << total_ << "\n" << std::flush;
    }
  }

private:
  std::ostream *out_;
  std::string label_;
  std::size_t total_;
  std::atomic<std::size_t> done_{0};
  std::mutex mutex_;
};

/// out[i] = f(i) for i < n on contiguous shards of the index range. The
/// result depends only on f, never on the thread count.
template <typename T, typename F>
std::vector<T> replicate(std::size_t n, unsigned threads, F &&f, Progress *progress = nullptr) {
  std::vector<T> out(n);
  const unsigned shards =
      static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
  std::vector<std::exception_ptr> errors(shards);
  auto work = [&](unsigned s) {
    const std::size_t lo = n * s / shards;
    const std::size_t hi = n * (s + 1) / shards;
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        out[i] = f(i);
        if (progress) progress->tick();
      }
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  if (shards == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(shards);
    for (unsigned s = 0; s < shards; ++s) pool.emplace_back(work, s);
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct RunOptions {
  unsigned threads = 1;
  std::ostream *progress = nullptr;
};

namespace detail {

inline SeedSpec seed_for(const ExperimentConfig &cfg, std::size_t i) {
  return {cfg.master_seed, static_cast<std::uint64_t>(i)};
}

inline Path driving_path(const SeedSpec &seed, const TimeGrid &grid) {
  std::vector<double> inc(grid.n_steps());
  fill_gaussian_row(seed, 0, grid.dt(), inc);
  return build_bm_path(grid, inc);
}

inline nlohmann::json interval_json(const Interval &i) { return {i.lo, i.hi}; }

inline nlohmann::json checks_json(const std::vector<Check> &checks) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto &c : checks) {
    a.push_back({{"name", c.name},
                 {"value", c.value},
                 {"threshold", c.threshold},
                 {"passed", c.passed},
                 {"detail", c.detail}});
  }
  return a;
}

/// max(rel * |target|, kFloorZ * se)
inline double mean_threshold(double rel, double target, double se) {
  return std::max(rel * std::abs(target), kFloorZ * se);
}

inline double effective_curvature(const ExperimentConfig &cfg) {
  return cfg.drift_mode == DriftMode::zero ? 0.0 : cfg.metric.mean_curvature();
}

inline std::vector<SampleBatch> sample_batches(const ExperimentConfig &cfg,
                                               const RunOptions &opt) {
  std::vector<ScaledRunConfig> configs;
  for (double t : cfg.t_grid) configs.push_back(cfg.scaled(t));
  const DeviationSampler sampler(TimeGrid(cfg.n_steps), configs);
  Progress progress(opt.progress, cfg.experiment, cfg.N);
  const auto rows = replicate<std::vector<DeviationSample>>(
      cfg.N, opt.threads,
      [&](std::size_t i) { return sampler.sample(seed_for(cfg, i)); }, &progress);
  std::vector<SampleBatch> batches(cfg.t_grid.size());
  for (std::size_t j = 0; j < batches.size(); ++j) {
    batches[j].t = cfg.t_grid[j];
    batches[j].samples.reserve(cfg.N);
  }
  for (const auto &row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) batches[j].samples.push_back(row[j]);
  }
  return batches;
}

inline std::size_t count_flagged(const std::vector<SampleBatch> &batches) {
  std::size_t n = 0;
  for (const auto &b : batches) {
    for (const auto &s : b.samples) n += s.flagged ? 1 : 0;
  }
  return n;
}

} // namespace detail

inline ExperimentResult run_verify_arcsine(const ExperimentConfig &cfg, const RunOptions &opt) {
  const TimeGrid grid(cfg.n_steps);
  Progress progress(opt.progress, cfg.experiment, cfg.N);
  const auto a1 = replicate<double>(
      cfg.N, opt.threads,
      [&](std::size_t i) {
        return occupation_positive(detail::driving_path(detail::seed_for(cfg, i), grid));
      },
      &progress);
  ExperimentResult r;
  r.experiment = cfg.experiment;
  const KSReport ks = ks_against(a1, KSReference::arcsine);
  MeanAccumulator mean;
  for (double v : a1) mean.add(v);

  std::vector<double> sorted(a1);
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream csv;
  csv << "x,empirical_cdf,arcsine_cdf\n";
  for (int j = 0; j <= 100; ++j) {
    const double x = j / 100.0;
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    csv << format_double(x) << ','
        << format_double(static_cast<double>(below) / static_cast<double>(sorted.size()))
        << ',' << format_double(arcsine_cdf(x)) << '\n';
  }
  r.csv = csv.str();

  const double floor = kKsQuantile / std::sqrt(static_cast<double>(cfg.N));
  r.checks.push_back(make_check("ks_arcsine", ks.statistic,
                                std::max(tolerance("arcsine.ks"), floor)));
  r.json = {{"ks", ks.statistic},
            {"n", ks.n},
            {"mean_A1", mean.mean()},
            {"mean_A1_stderr", mean.standard_error()}};
  return r;
}

struct LocalTimeRecord {
  double tanaka = 0.0;
  double interval = 0.0;
  double downcrossing = 0.0;
  double udl = 0.0;
  double abs_w = 0.0; // |W_1| from an independent sub-stream
  double violation = 0.0;
  bool starved = false;
};

/// Sub-stream of the reference |W_1| draw, disjoint from the path rows.
inline constexpr std::uint32_t kReferenceSubstream = 1000;

inline LocalTimeRecord local_time_record(const SeedSpec &seed, const TimeGrid &grid,
                                         double eps) {
  const Path w = detail::driving_path(seed, grid);
  const double end[] = {1.0};
  LocalTimeRecord rec;
  const LocalTimeCurve tanaka = local_time_tanaka(w, 0.0);
  const LocalTimeCurve interval = local_time_interval(w, 0.0, eps, end);
  const LocalTimeCurve down = local_time_downcrossing(w, 0.0, eps, end);
  rec.tanaka = tanaka.final_value();
  rec.interval = interval.final_value();
  rec.downcrossing = down.final_value();
  rec.udl = integral_u_dL(tanaka, grid).value;
  rec.violation =
      std::max({tanaka.max_violation, interval.max_violation, down.max_violation});
  rec.starved = interval.starved || down.starved;
  PhiloxStream stream(seed, kReferenceSubstream);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  rec.abs_w = std::abs(normal(stream));
  return rec;
}

inline ExperimentResult run_local_time_check(const ExperimentConfig &cfg,
                                             const RunOptions &opt) {
  const TimeGrid grid(cfg.n_steps);
  const double eps = cfg.resolved_bandwidth();
  Progress progress(opt.progress, cfg.experiment, cfg.N);
  const auto recs = replicate<LocalTimeRecord>(
      cfg.N, opt.threads,
      [&](std::size_t i) { return local_time_record(detail::seed_for(cfg, i), grid, eps); },
      &progress);

  MeanAccumulator tanaka, interval, down, udl, diff_interval, diff_down, violation;
  std::vector<double> l1, abs_w;
  bool starved = false;
  for (const auto &r : recs) {
    tanaka.add(r.tanaka);
    interval.add(r.interval);
    down.add(r.downcrossing);
    udl.add(r.udl);
    diff_interval.add(std::abs(r.interval - r.tanaka));
    diff_down.add(std::abs(r.downcrossing - r.tanaka));
    violation.add(r.violation);
    l1.push_back(r.tanaka);
    abs_w.push_back(r.abs_w);
    starved = starved || r.starved;
  }
  const double target_l1 = std::sqrt(2.0 / std::numbers::pi);
  const KSReport ks = ks_two_sample(l1, abs_w);

  ExperimentResult r;
  r.experiment = cfg.experiment;
  std::ostringstream csv;
  csv << "quantity,N,mean,stderr,target,rel_error,mean_abs_diff_vs_tanaka\n";
  const auto row = [&](std::string_view name, const MeanAccumulator &acc, double target,
                       double diff) {
    csv << name << ',' << acc.count() << ',' << format_double(acc.mean()) << ','
        << format_double(acc.standard_error()) << ',' << format_double(target) << ','
        << format_double((acc.mean() - target) / target) << ',' << format_double(diff)
        << '\n';
  };
  row("L1_tanaka", tanaka, target_l1, 0.0);
  row("L1_interval", interval, target_l1, diff_interval.mean());
  row("L1_downcrossing", down, target_l1, diff_down.mean());
  row("int_u_dL", udl, kMeanUdL, 0.0);
  r.csv = csv.str();

  const auto rel_check = [&](std::string name, const MeanAccumulator &acc, double target,
                             std::string_view key) {
    r.checks.push_back(make_check(
        std::move(name), std::abs(acc.mean() - target),
        detail::mean_threshold(tolerance(key), target, acc.standard_error())));
  };
  rel_check("tanaka_mean", tanaka, target_l1, "local_time.tanaka_rel");
  rel_check("interval_mean", interval, target_l1, "local_time.interval_rel");
  rel_check("downcrossing_mean", down, target_l1, "local_time.downcrossing_rel");
  rel_check("udl_mean", udl, kMeanUdL, "local_time.udl_rel");
  r.checks.push_back(make_check("interval_vs_tanaka", diff_interval.mean(),
                                tolerance("local_time.cross_abs")));
  r.checks.push_back(make_check("downcrossing_vs_tanaka", diff_down.mean(),
                                tolerance("local_time.cross_abs")));
  const double n = static_cast<double>(cfg.N);
  r.checks.push_back(make_check(
      "ks_L1_vs_abs_W1", ks.statistic,
      std::max(tolerance("local_time.ks_abs_w"), kKsQuantile * std::sqrt(2.0 / n))));
  r.checks.push_back(make_check("pre_clamp_violation", violation.mean(),
                                tolerance("local_time.violation") * std::sqrt(grid.dt())));
  if (starved) r.notes.push_back("bandwidth below sqrt(dt)/10: estimators are starved");

  r.json = {{"bandwidth", eps},
            {"L1_tanaka", tanaka.mean()},
            {"L1_tanaka_stderr", tanaka.standard_error()},
            {"L1_interval", interval.mean()},
            {"L1_downcrossing", down.mean()},
            {"int_u_dL", udl.mean()},
            {"int_u_dL_stderr", udl.standard_error()},
            {"ks_L1_vs_abs_W1", ks.statistic},
            {"mean_abs_diff_interval", diff_interval.mean()},
            {"mean_abs_diff_downcrossing", diff_down.mean()},
            {"mean_max_violation", violation.mean()},
            {"starved", starved}};
  return r;
}

inline ExperimentResult run_deviation_sweep(const ExperimentConfig &cfg,
                                            const RunOptions &opt) {
  const auto batches = detail::sample_batches(cfg, opt);
  const double h = detail::effective_curvature(cfg);
  ExperimentResult r;
  r.experiment = cfg.experiment;
  r.flagged = detail::count_flagged(batches);
  const SweepResult sweep = fit_deviation_coefficient(batches, h);

  std::ostringstream csv;
  csv << "t,N,mean_dev_over_sqrt_t,stderr,paired_mean,paired_stderr,residual_L1,"
         "residual_L2,exit_fraction\n";
  // Rows in configured t order.
  nlohmann::json per_t = nlohmann::json::array();
  for (double t : cfg.t_grid) {
    const auto it = std::find_if(sweep.per_t.begin(), sweep.per_t.end(),
                                 [&](const PerTStatistics &s) { return s.t == t; });
    const PerTStatistics &s = *it;
    csv << format_double(s.t) << ',' << s.n << ',' << format_double(s.mean_dev_over_sqrt_t)
        << ',' << format_double(s.stderr_dev) << ',' << format_double(s.paired_mean) << ','
        << format_double(s.paired_stderr) << ',' << format_double(s.residual_l1) << ','
        << format_double(s.residual_l2) << ',' << format_double(s.exit_fraction) << '\n';
    per_t.push_back({{"t", s.t},
                     {"N", s.n},
                     {"flagged", s.flagged},
                     {"mean_dev_over_sqrt_t", s.mean_dev_over_sqrt_t},
                     {"stderr", s.stderr_dev},
                     {"paired_mean", s.paired_mean},
                     {"paired_stderr", s.paired_stderr},
                     {"raw_mean_over_sqrt_t", s.raw_mean_over_sqrt_t},
                     {"raw_stderr", s.raw_stderr},
                     {"residual_L1", s.residual_l1},
                     {"residual_L2", s.residual_l2},
                     {"exit_fraction", s.exit_fraction}});
  }
  r.csv = csv.str();

  const double target = 0.5 * h * kMeanUdL;
  const double half = 0.5 * (sweep.coefficient_ci.hi - sweep.coefficient_ci.lo);
  if (h == 0.0) {
    r.checks.push_back(make_check("coefficient_ci_contains_zero",
                                  std::abs(sweep.fitted_coefficient), half));
  } else {
    r.checks.push_back(make_check(
        "coefficient", std::abs(sweep.fitted_coefficient - target),
        std::max(tolerance("sweep.coefficient_rel") * std::abs(target),
                 kFloorZ / detail::kZ95 * half),
        "target " + format_double(target)));
    const double slope_tol = tolerance("sweep.remainder_slope_halfwidth");
    r.checks.push_back(
        make_check("remainder_slope_p1", std::abs(sweep.remainder_l1.exponent - 0.75), slope_tol));
    r.checks.push_back(
        make_check("remainder_slope_p2", std::abs(sweep.remainder_l2.exponent - 0.75), slope_tol));
  }
  const PerTStatistics &smallest = sweep.per_t.back();
  r.checks.push_back(make_check("paired_mean_smallest_t", std::abs(smallest.paired_mean),
                                tolerance("sweep.paired_se") * smallest.paired_stderr));

  nlohmann::json remainder = nullptr;
  if (h != 0.0) {
    remainder = {{"p1", {{"exponent", sweep.remainder_l1.exponent},
                         {"ci", detail::interval_json(sweep.remainder_l1.ci)}}},
                 {"p2", {{"exponent", sweep.remainder_l2.exponent},
                         {"ci", detail::interval_json(sweep.remainder_l2.ci)}}}};
  }
  r.json = {{"mean_curvature", h},
            {"target_coefficient", target},
            {"fitted_coefficient", sweep.fitted_coefficient},
            {"coefficient_ci", detail::interval_json(sweep.coefficient_ci)},
            {"raw_fitted_coefficient", sweep.raw_fitted_coefficient},
            {"raw_coefficient_ci", detail::interval_json(sweep.raw_coefficient_ci)},
            {"mean_prediction", sweep.mean_prediction},
            {"mean_prediction_stderr", sweep.mean_prediction_stderr},
            {"remainder", remainder},
            {"per_t", per_t}};
  return r;
}

inline ExperimentResult run_weak_expansion(const ExperimentConfig &cfg,
                                           const RunOptions &opt) {
  const auto batches = detail::sample_batches(cfg, opt);
  const double h = detail::effective_curvature(cfg);
  const TestFunction phi = test_function(cfg.phi);
  ExperimentResult r;
  r.experiment = cfg.experiment;
  r.flagged = detail::count_flagged(batches);
  const WeakExpansionReport rep = weak_expansion_check(phi, batches, h);

  std::ostringstream csv;
  csv << "t,N,mean_phi,raw_slope,raw_stderr,paired_slope,paired_stderr\n";
  nlohmann::json per_t = nlohmann::json::array();
  for (double t : cfg.t_grid) {
    const auto it = std::find_if(rep.per_t.begin(), rep.per_t.end(),
                                 [&](const WeakExpansionPerT &s) { return s.t == t; });
    const WeakExpansionPerT &s = *it;
    csv << format_double(s.t) << ',' << s.n << ',' << format_double(s.mean_phi) << ','
        << format_double(s.raw_slope) << ',' << format_double(s.raw_stderr) << ','
        << format_double(s.paired_slope) << ',' << format_double(s.paired_stderr) << '\n';
    per_t.push_back({{"t", s.t},
                     {"N", s.n},
                     {"mean_phi", s.mean_phi},
                     {"raw_slope", s.raw_slope},
                     {"raw_stderr", s.raw_stderr},
                     {"paired_slope", s.paired_slope},
                     {"paired_stderr", s.paired_stderr}});
  }
  r.csv = csv.str();

  const double half = 0.5 * (rep.slope_ci.hi - rep.slope_ci.lo);
  r.checks.push_back(make_check(
      "weak_slope", std::abs(rep.fitted_slope - rep.predicted_slope),
      std::max(tolerance("weak.slope_rel") * std::abs(rep.predicted_slope),
               kFloorZ / detail::kZ95 * half),
      "predicted " + format_double(rep.predicted_slope)));
  if (std::abs(rep.pathwise_slope - rep.predicted_slope) >
      tolerance("weak.slope_rel") * std::abs(rep.predicted_slope) + 4.0 * rep.pathwise_stderr) {
    r.notes.push_back("H E[phi'(A1) I]/2 = " + format_double(rep.pathwise_slope) +
                      " differs from the phi'(0) prediction");
  }
  r.json = {{"phi", rep.phi_name},
            {"mean_curvature", h},
            {"mu0_expectation", rep.mu0_expectation},
            {"predicted_slope", rep.predicted_slope},
            {"pathwise_slope", rep.pathwise_slope},
            {"pathwise_stderr", rep.pathwise_stderr},
            {"fitted_slope", rep.fitted_slope},
            {"slope_ci", detail::interval_json(rep.slope_ci)},
            {"raw_fitted_slope", rep.raw_fitted_slope},
            {"raw_slope_ci", detail::interval_json(rep.raw_slope_ci)},
            {"per_t", per_t}};
  return r;
}

struct OccupationRecord {
  double zero = 0.0;
  double indicator = 0.0;
  double shifted = 0.0;
};

inline OccupationRecord occupation_record(const SeedSpec &seed, const TimeGrid &grid,
                                          double eps, double shift) {
  const Path w = detail::driving_path(seed, grid);
  const auto levels = default_levels(w, eps);
  OccupationRecord rec;
  rec.zero = occupation_formula_residual(w, [](double, double) { return 0.0; }, levels, eps);
  rec.indicator = occupation_formula_residual(
      w, [](double x, double) { return x >= 0.0 ? 1.0 : 0.0; }, levels, eps);
  rec.shifted = occupation_formula_residual(
      w, [shift](double x, double s) { return x + shift * s >= 0.0 ? 1.0 : 0.0; }, levels,
      eps);
  return rec;
}

inline ExperimentResult run_occupation_formula(const ExperimentConfig &cfg,
                                               const RunOptions &opt) {
  const TimeGrid grid(cfg.n_steps);
  const double eps = cfg.resolved_bandwidth();
  Progress progress(opt.progress, cfg.experiment, cfg.N);
  const auto recs = replicate<OccupationRecord>(
      cfg.N, opt.threads,
      [&](std::size_t i) {
        return occupation_record(detail::seed_for(cfg, i), grid, eps, cfg.psi_shift);
      },
      &progress);
  MeanAccumulator zero, indicator, shifted;
  double max_zero = 0.0, max_indicator = 0.0, max_shifted = 0.0;
  for (const auto &rec : recs) {
    zero.add(rec.zero);
    indicator.add(rec.indicator);
    shifted.add(rec.shifted);
    max_zero = std::max(max_zero, rec.zero);
    max_indicator = std::max(max_indicator, rec.indicator);
    max_shifted = std::max(max_shifted, rec.shifted);
  }
  ExperimentResult r;
  r.experiment = cfg.experiment;
  std::ostringstream csv;
  csv << "psi,N,mean_residual,stderr,max_residual,threshold\n";
  const auto add = [&](std::string_view name, const MeanAccumulator &acc, double max,
                       std::string_view key) {
    csv << name << ',' << acc.count() << ',' << format_double(acc.mean()) << ','
        << format_double(acc.standard_error()) << ',' << format_double(max) << ','
        << format_double(tolerance(key)) << '\n';
    r.checks.push_back(make_check("residual_" + std::string(name), acc.mean(), tolerance(key)));
  };
  add("zero", zero, max_zero, "occupation.zero");
  add("indicator", indicator, max_indicator, "occupation.indicator");
  add("shifted_indicator", shifted, max_shifted, "occupation.shifted");
  r.csv = csv.str();
  r.json = {{"bandwidth", eps},
            {"psi_shift", cfg.psi_shift},
            {"mean_residual_zero", zero.mean()},
            {"mean_residual_indicator", indicator.mean()},
            {"mean_residual_shifted_indicator", shifted.mean()}};
  return r;
}

/// Fills every default the run depends on so the echo is self-contained.
inline ExperimentConfig resolve(ExperimentConfig cfg) {
  cfg.threads = resolve_threads(cfg.threads);
  cfg.bandwidth = cfg.resolved_bandwidth();
  return cfg;
}

inline ExperimentResult run_experiment(const ExperimentConfig &cfg, const RunOptions &opt) {
  if (cfg.experiment == "verify-arcsine") return run_verify_arcsine(cfg, opt);
  if (cfg.experiment == "local-time-check") return run_local_time_check(cfg, opt);
  if (cfg.experiment == "deviation-sweep") return run_deviation_sweep(cfg, opt);
  if (cfg.experiment == "weak-expansion") return run_weak_expansion(cfg, opt);
  if (cfg.experiment == "occupation-formula") return run_occupation_formula(cfg, opt);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

inline std::string render_summary(const ExperimentConfig &cfg, const ExperimentResult &r) {
  std::ostringstream out;
  out << "experiment: " << cfg.experiment << "\n"
      << "tolerance table: " << kToleranceVersion << " (floor " << kFloorZ
      << " standard errors)\n"
      << "N: " << cfg.N << "  n_steps: " << cfg.n_steps << "  master_seed: " << cfg.master_seed
      << "\n"
      << "flagged replications: " << r.flagged << "\n\n";
  for (const auto &c : r.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << format_double(c.value)
        << " <= " << format_double(c.threshold);
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  for (const auto &n : r.notes) out << "note: " << n << "\n";
  out << "\ntolerances:\n";
  for (const auto &t : kTolerances) {
    out << "  " << t.key << " = " << format_double(t.value) << "  " << t.meaning << "\n";
  }
  out << "\nexit status: " << r.exit_code() << "\n";
  return out.str();
}

/// Writes every artifact to a temporary name first, then renames them all.
inline void write_artifacts(const std::filesystem::path &dir,
                            const std::vector<std::pair<std::string, std::string>> &files) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, fs::path>> staged;
  for (const auto &[name, content] : files) {
    const fs::path final_path = dir / name;
    const fs::path tmp = dir / ("." + name + ".tmp");
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << content;
    f.close();
    if (!f) throw std::runtime_error("failed to write " + tmp.string());
    staged.emplace_back(tmp, final_path);
  }
  for (const auto &[tmp, final_path] : staged) fs::rename(tmp, final_path);
}

/// Runs one experiment and persists its artifacts. Returns the exit code.
inline int run(ExperimentConfig cfg, std::ostream &log, std::ostream *progress = nullptr) {
  try {
    cfg.validate();
    cfg = resolve(cfg);
  } catch (const ConfigError &e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  ExperimentResult result;
  try {
    result = run_experiment(cfg, RunOptions{cfg.threads, progress});
  } catch (const ConfigError &e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  nlohmann::json json = result.json;
  json["experiment"] = cfg.experiment;
  json["tolerance_version"] = std::string(kToleranceVersion);
  json["flagged"] = result.flagged;
  json["checks"] = detail::checks_json(result.checks);
  json["exit_status"] = result.exit_code();
  const std::string summary = render_summary(cfg, result);
  try {
    write_artifacts(cfg.output_dir, {{"config.echo.json", config_to_json(cfg).dump(2) + "\n"},
                                     {"results.csv", result.csv},
                                     {"results.json", json.dump(2) + "\n"},
                                     {"summary.txt", summary}});
  } catch (const std::exception &e) {
    log << "could not write artifacts: " << e.what() << "\n";
    return kExitConfig;
  }
  log << summary;
  return result.exit_code();
}

inline nlohmann::json sample_to_json(const DeviationSample &s, double mean_curvature) {
  const auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"seed", {{"master_seed", s.seed.master_seed},
                    {"replicate_index", s.seed.replicate_index}}},
          {"t", s.t},
          {"T_t", num(s.T_t)},
          {"A1", num(s.A1)},
          {"A1_drift", num(s.A1_drift)},
          {"I_udL", num(s.I_udL)},
          {"residual", num(s.residual(mean_curvature))},
          {"tau", num(s.tau)},
          {"exited", s.exited},
          {"flagged", s.flagged}};
}

/// Re-executes replication `replicate_index` at t_grid[t_index].
inline DeviationSample replay(const ExperimentConfig &cfg, std::uint64_t replicate_index,
                              std::size_t t_index) {
  if (t_index >= cfg.t_grid.size()) {
    throw ConfigError("t-index " + std::to_string(t_index) + " outside t_grid of size " +
                      std::to_string(cfg.t_grid.size()));
  }
  try {
    cfg.metric.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  const DeviationSampler sampler(TimeGrid(cfg.n_steps), {cfg.scaled(cfg.t_grid[t_index])});
  return sampler.sample(SeedSpec{cfg.master_seed, replicate_index}).front();
}

} // namespace occudev

#endif // OCCUDEV_HARNESS_HPP_
