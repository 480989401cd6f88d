#ifndef OCCUDEV_CONFIG_HPP_
#define OCCUDEV_CONFIG_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "occudev/diffusion.hpp"
#include "occudev/geometry.hpp"
#include "occudev/statistics.hpp"

namespace occudev {

/// Raised for malformed or inconsistent experiment configurations.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kExperiments[] = {
    "verify-arcsine", "local-time-check", "deviation-sweep", "weak-expansion",
    "occupation-formula"};

inline bool is_known_experiment(std::string_view name) {
  for (auto e : kExperiments) {
    if (e == name) return true;
  }
  return false;
}

struct ExperimentConfig {
  std::string experiment = "deviation-sweep";
  std::size_t n_steps = 8192;
  std::size_t N = 1000;
  std::vector<double> t_grid;
  double alpha = 0.3;
  DriftMode drift_mode = DriftMode::exact_b1;
  MetricSpec metric;
  std::uint64_t master_seed = 1;
  unsigned threads = 0;
  std::string output_dir = "occudev-out";
  std::string phi = "identity";         // weak-expansion test function
  double psi_shift = 0.5;               // occupation-formula drift c
  std::optional<double> bandwidth;      // defaults to sqrt(dt)

  bool needs_t_grid() const {
    return experiment == "deviation-sweep" || experiment == "weak-expansion";
  }
  double resolved_bandwidth() const {
    return bandwidth.value_or(std::sqrt(1.0 / static_cast<double>(n_steps)));
  }

  ScaledRunConfig scaled(double t) const {
    ScaledRunConfig c;
    c.t = t;
    c.spec = metric;
    c.drift_mode = drift_mode;
    c.alpha = alpha;
    return c;
  }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

inline bool operator==(const MetricSpec &a, const MetricSpec &b) {
  const auto same = [](const Eigen::MatrixXd &x, const Eigen::MatrixXd &y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
  };
  return a.dimension == b.dimension && same(a.pi, b.pi) && a.r_valid == b.r_valid &&
         same(a.quadratic_correction, b.quadratic_correction) && a.fd_step == b.fd_step;
}

inline bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) {
  return a.experiment == b.experiment && a.n_steps == b.n_steps && a.N == b.N &&
         a.t_grid == b.t_grid && a.alpha == b.alpha && a.drift_mode == b.drift_mode &&
         a.metric == b.metric && a.master_seed == b.master_seed &&
         a.threads == b.threads && a.output_dir == b.output_dir && a.phi == b.phi &&
         a.psi_shift == b.psi_shift && a.bandwidth == b.bandwidth;
}

inline void ExperimentConfig::validate() const {
  if (!is_known_experiment(experiment)) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  if (n_steps < 2) throw ConfigError("n_steps must be at least 2");
  if (N < 1) throw ConfigError("N must be positive");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 1/2)");
  if (needs_t_grid()) {
    if (t_grid.size() < 3) {
      throw ConfigError("t_grid needs at least 3 values for " + experiment);
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      if (!(t_grid[i] > 0.0 && t_grid[i] <= 1.0)) {
        throw ConfigError("t_grid values must lie in (0, 1]");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (t_grid[j] == t_grid[i]) throw ConfigError("t_grid values must be distinct");
      }
    }
  }
  if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  if (!std::isfinite(psi_shift)) throw ConfigError("psi_shift must be finite");
  try {
    metric.validate();
    if (experiment == "weak-expansion") (void)test_function(phi);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
}

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd &m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  }
  return a;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json &a, int size,
                                        const char *key) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(size * size)) {
    throw ConfigError(std::string(key) + " must be a row-major array of " +
                      std::to_string(size * size) + " numbers");
  }
  Eigen::MatrixXd m(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const auto &v = a[static_cast<std::size_t>(i * size + j)];
      if (!v.is_number()) throw ConfigError(std::string(key) + " entries must be numbers");
      m(i, j) = v.get<double>();
    }
  }
  return m;
}

template <typename T>
T get_or(const nlohmann::json &j, const char *key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline std::size_t get_count(const nlohmann::json &j, const char *key,
                             std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto &v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string("config key '") + key +
                      "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

} // namespace detail

inline nlohmann::json metric_to_json(const MetricSpec &m) {
  nlohmann::json j;
  j["dimension"] = m.dimension;
  j["pi_matrix"] = detail::matrix_to_json(m.pi);
  j["r_valid"] = m.r_valid;
  if (m.quadratic_correction.size() != 0) {
    j["quadratic_correction"] = detail::matrix_to_json(m.quadratic_correction);
  }
  j["fd_step"] = m.fd_step;
  return j;
}

/// Accepts either the explicit schema or {"preset": "sphere", "dimension",
/// "radius"}.
inline MetricSpec metric_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("metric must be an object");
  if (j.contains("preset")) {
    const auto preset = detail::get_or<std::string>(j, "preset", "");
    if (preset != "sphere") throw ConfigError("unknown metric preset '" + preset + "'");
    const int n = detail::get_or<int>(j, "dimension", 2);
    const double radius = detail::get_or<double>(j, "radius", 1.0);
    try {
      MetricSpec m = sphere_preset(n, radius);
      m.fd_step = detail::get_or<double>(j, "fd_step", m.fd_step);
      return m;
    } catch (const std::invalid_argument &e) {
      throw ConfigError(e.what());
    }
  }
  MetricSpec m;
  m.dimension = detail::get_or<int>(j, "dimension", 2);
  if (m.dimension < 2) throw ConfigError("metric dimension must be at least 2");
  if (!j.contains("pi_matrix")) throw ConfigError("metric needs pi_matrix");
  m.pi = detail::matrix_from_json(j.at("pi_matrix"), m.dimension - 1, "pi_matrix");
  m.r_valid = detail::get_or<double>(j, "r_valid", m.r_valid);
  if (j.contains("quadratic_correction")) {
    m.quadratic_correction = detail::matrix_from_json(
        j.at("quadratic_correction"), m.dimension - 1, "quadratic_correction");
  }
  m.fd_step = detail::get_or<double>(j, "fd_step", m.fd_step);
  return m;
}

/// The fully resolved configuration.
inline nlohmann::json config_to_json(const ExperimentConfig &c) {
  nlohmann::json j;
  j["experiment"] = c.experiment;
  j["n_steps"] = c.n_steps;
  j["N"] = c.N;
  j["t_grid"] = c.t_grid;
  j["alpha"] = c.alpha;
  j["drift_mode"] = std::string(to_string(c.drift_mode));
  j["metric"] = metric_to_json(c.metric);
  j["master_seed"] = c.master_seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["phi"] = c.phi;
  j["psi_shift"] = c.psi_shift;
  if (c.bandwidth) j["bandwidth"] = *c.bandwidth;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.experiment = detail::get_or<std::string>(j, "experiment", c.experiment);
  c.n_steps = detail::get_count(j, "n_steps", c.n_steps);
  c.N = detail::get_count(j, "N", c.N);
  c.t_grid = detail::get_or<std::vector<double>>(j, "t_grid", {});
  c.alpha = detail::get_or<double>(j, "alpha", c.alpha);
  try {
    c.drift_mode = parse_drift_mode(
        detail::get_or<std::string>(j, "drift_mode", std::string(to_string(c.drift_mode))));
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  if (j.contains("metric")) c.metric = metric_from_json(j.at("metric"));
  c.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  c.threads = static_cast<unsigned>(detail::get_count(j, "threads", c.threads));
  c.output_dir = detail::get_or<std::string>(j, "output_dir", c.output_dir);
  c.phi = detail::get_or<std::string>(j, "phi", c.phi);
  c.psi_shift = detail::get_or<double>(j, "psi_shift", c.psi_shift);
  if (j.contains("bandwidth")) c.bandwidth = detail::get_or<double>(j, "bandwidth", 0.0);
  return c;
}

inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

} // namespace occudev

#endif // OCCUDEV_CONFIG_HPP_
