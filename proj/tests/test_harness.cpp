#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "occudev/harness.hpp"

using namespace occudev;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("occudev_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig sweep_config(const fs::path &out) {
  ExperimentConfig c;
  c.experiment = "deviation-sweep";
  c.n_steps = 256;
  c.N = 64;
  c.t_grid = {0.04, 0.01, 0.0025};
  c.metric = sphere_preset(3, 1.0);
  c.master_seed = 2024;
  c.output_dir = out.string();
  return c;
}

TEST(Config, RoundTrip) {
  ExperimentConfig c = sweep_config("/tmp/x");
  c.metric.quadratic_correction = Eigen::MatrixXd::Identity(2, 2) * 0.1;
  c.metric.pi(0, 1) = c.metric.pi(1, 0) = 0.1 / 3.0;
  c.bandwidth = 0.0123456789;
  c.alpha = 0.29;
  c.drift_mode = DriftMode::constant_H;
  c.master_seed = 0xFFFFFFFFFFFFFFFFULL;
  c.threads = 3;
  c.psi_shift = -0.25;
  c.phi = "shifted_square";
  EXPECT_EQ(parse_config(config_to_json(c).dump()), c);

  ExperimentConfig d;
  EXPECT_EQ(parse_config(config_to_json(d).dump(2)), d);
}

TEST(Config, SpherePresetSchema) {
  const auto c = parse_config(R"({"experiment": "deviation-sweep", "t_grid": [0.04, 0.01, 0.0025],
                                  "metric": {"preset": "sphere", "dimension": 3, "radius": 1.0}})");
  EXPECT_EQ(c.metric, sphere_preset(3, 1.0));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config(R"({"n_steps": -5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"n_steps": 1.5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"N": "many"})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"drift_mode": "sideways"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"metric": {"preset": "torus"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"metric": {"dimension": 3, "pi_matrix": [1, 0, 0]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"metric": {"preset": "sphere", "radius": -1}})"), ConfigError);

  auto c = sweep_config("/tmp/x");
  EXPECT_NO_THROW(c.validate());
  c.t_grid = {0.01, 0.04};
  EXPECT_THROW(c.validate(), ConfigError);
  c.t_grid = {0.01, 0.04, 0.01};
  EXPECT_THROW(c.validate(), ConfigError);
  c.t_grid = {0.01, 0.04, 2.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = sweep_config("/tmp/x");
  c.experiment = "bogus";
  EXPECT_THROW(c.validate(), ConfigError);
  c = sweep_config("/tmp/x");
  c.metric.pi *= 10.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = sweep_config("/tmp/x");
  c.N = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = sweep_config("/tmp/x");
  c.experiment = "weak-expansion";
  c.phi = "nope";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Harness, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Harness, ResolveThreads) {
  EXPECT_EQ(resolve_threads(3), 3u);
  ::setenv("OCCUDEV_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(0), 5u);
  ::setenv("OCCUDEV_THREADS", "junk", 1);
  EXPECT_GE(resolve_threads(0), 1u);
  ::unsetenv("OCCUDEV_THREADS");
}

TEST(Harness, ReplicateIsIndexOrderedAndPropagatesErrors) {
  for (unsigned threads : {1u, 3u, 8u, 100u}) {
    const auto v = replicate<std::size_t>(37, threads, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(v[i], i * i);
  }
  EXPECT_THROW(replicate<int>(10, 4,
                              [](std::size_t i) -> int {
                                if (i == 7) throw std::domain_error("boom");
                                return 0;
                              }),
               std::domain_error);
  EXPECT_TRUE(replicate<int>(0, 4, [](std::size_t) { return 1; }).empty());
}

TEST(Harness, MalformedConfigWritesNothing) {
  const fs::path out = scratch("malformed");
  auto c = sweep_config(out);
  c.n_steps = 1;
  std::ostringstream log;
  EXPECT_EQ(run(c, log), kExitConfig);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Harness, SweepArtifactsAndThreadInvariance) {
  std::string reference;
  for (unsigned threads : {1u, 4u, 8u}) {
    const fs::path out = scratch("threads" + std::to_string(threads));
    auto c = sweep_config(out);
    c.threads = threads;
    std::ostringstream log;
    const int code = run(c, log);
    EXPECT_TRUE(code == kExitOk || code == kExitAssertion) << log.str();
    for (const char *name : {"config.echo.json", "results.csv", "results.json", "summary.txt"}) {
      EXPECT_TRUE(fs::exists(out / name)) << name;
    }
    for (const auto &entry : fs::directory_iterator(out)) {
      EXPECT_NE(entry.path().extension(), ".tmp");
    }
    const std::string csv = slurp(out / "results.csv");
    if (reference.empty()) {
      reference = csv;
      EXPECT_EQ(csv.substr(0, csv.find('\n')),
                "t,N,mean_dev_over_sqrt_t,stderr,paired_mean,paired_stderr,residual_L1,"
                "residual_L2,exit_fraction");
    } else {
      EXPECT_EQ(csv, reference) << "threads " << threads;
    }
    const auto echo = parse_config(slurp(out / "config.echo.json"));
    EXPECT_EQ(echo.threads, threads);
    EXPECT_EQ(echo.master_seed, 2024u);
    EXPECT_NE(slurp(out / "summary.txt").find(std::string(kToleranceVersion)),
              std::string::npos);
    fs::remove_all(out);
  }
}

TEST(Harness, EchoReproducesRun) {
  const fs::path a = scratch("echo_a");
  const fs::path b = scratch("echo_b");
  auto c = sweep_config(a);
  c.threads = 2;
  std::ostringstream log;
  run(c, log);
  auto again = parse_config(slurp(a / "config.echo.json"));
  again.output_dir = b.string();
  run(again, log);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Harness, NullCurvatureSweepPasses) {
  const fs::path out = scratch("null");
  auto c = sweep_config(out);
  c.metric.pi.setZero();
  std::ostringstream log;
  EXPECT_EQ(run(c, log), kExitOk) << log.str();
  const auto json = nlohmann::json::parse(slurp(out / "results.json"));
  EXPECT_EQ(json["fitted_coefficient"].get<double>(), 0.0);
  EXPECT_TRUE(json["remainder"].is_null());
  fs::remove_all(out);
}

TEST(Harness, SmallRunsOfEveryExperiment) {
  struct Case {
    const char *experiment;
    std::size_t N;
  };
  for (const Case k : {Case{"verify-arcsine", 400}, Case{"local-time-check", 400},
                       Case{"occupation-formula", 40}, Case{"weak-expansion", 64}}) {
    const fs::path out = scratch(k.experiment);
    auto c = sweep_config(out);
    c.experiment = k.experiment;
    c.N = k.N;
    c.n_steps = 8192;
    c.phi = "one";
    c.threads = 2;
    std::ostringstream log;
    const int code = run(c, log);
    const auto json = nlohmann::json::parse(slurp(out / "results.json"));
    if (std::string(k.experiment) == "local-time-check") {
      // The downcrossing and pathwise agreement checks do not hold at the
      // default bandwidth; every other check must.
      EXPECT_TRUE(code == kExitOk || code == kExitAssertion) << log.str();
      for (const auto &chk : json["checks"]) {
        const auto name = chk["name"].get<std::string>();
        if (name == "downcrossing_mean" || name.ends_with("_vs_tanaka")) continue;
        EXPECT_TRUE(chk["passed"].get<bool>()) << name << "\n" << log.str();
      }
    } else {
      EXPECT_EQ(code, kExitOk) << k.experiment << "\n" << log.str();
    }
    EXPECT_EQ(json["experiment"], k.experiment);
    EXPECT_EQ(json["exit_status"], code);
    fs::remove_all(out);
  }
}

TEST(Replay, DeterministicAndMatchesBatch) {
  const auto c = sweep_config("/tmp/unused");
  const auto s1 = replay(c, 5, 1);
  const std::string a = sample_to_json(s1, 2.0).dump();
  const std::string b = sample_to_json(replay(c, 5, 1), 2.0).dump();
  EXPECT_EQ(a, b);

  std::vector<ScaledRunConfig> configs;
  for (double t : c.t_grid) configs.push_back(c.scaled(t));
  const auto row = DeviationSampler(TimeGrid(c.n_steps), configs).sample({c.master_seed, 5});
  EXPECT_EQ(row[1].T_t, s1.T_t);
  EXPECT_EQ(row[1].I_udL, s1.I_udL);
  EXPECT_EQ(s1.seed, (SeedSpec{2024, 5}));
  EXPECT_THROW(replay(c, 5, 3), ConfigError);
}

TEST(Replay, FlatZeroDriftCouplesExactly) {
  auto c = sweep_config("/tmp/unused");
  c.metric.pi.setZero();
  c.drift_mode = DriftMode::zero;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto s = replay(c, i, 2);
    EXPECT_EQ(s.T_t, s.A1);
    EXPECT_EQ(s.residual(0.0), 0.0);
  }
}

#ifdef OCCUDEV_CLI_PATH
int shell(const std::string &cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture(const std::string &cmd) {
  std::string out;
  FILE *pipe = ::popen(cmd.c_str(), "r");
  std::array<char, 256> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  ::pclose(pipe);
  return out;
}

TEST(Cli, ConfigErrorExitCodeAndNoArtifacts) {
  const fs::path dir = scratch("cli_bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"n_steps": -5, "N": 10})";
  const std::string out = (dir / "out").string();
  const std::string cmd = std::string(OCCUDEV_CLI_PATH) + " verify-arcsine --config " +
                          (dir / "bad.json").string() + " --out " + out + " 2>/dev/null";
  EXPECT_EQ(shell(cmd), kExitConfig);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(shell(std::string(OCCUDEV_CLI_PATH) + " verify-arcsine --config " +
                  (dir / "missing.json").string() + " 2>/dev/null"),
            kExitConfig);
  EXPECT_EQ(shell(std::string(OCCUDEV_CLI_PATH) + " no-such-experiment >/dev/null 2>&1"),
            kExitConfig);
  fs::remove_all(dir);
}

TEST(Cli, RunAndReplay) {
  const fs::path dir = scratch("cli_run");
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << config_to_json(sweep_config(dir / "ignored")).dump();
  const std::string base = std::string(OCCUDEV_CLI_PATH);
  const std::string cfg = (dir / "cfg.json").string();
  const int code = shell(base + " deviation-sweep --quiet --config " + cfg + " --threads 2 --out " +
                         (dir / "out").string() + " >/dev/null");
  EXPECT_TRUE(code == kExitOk || code == kExitAssertion);
  EXPECT_TRUE(fs::exists(dir / "out" / "results.csv"));
  EXPECT_FALSE(fs::exists(dir / "ignored"));

  const std::string r1 = capture(base + " replay --config " + cfg + " --replicate 3 --t-index 2");
  const std::string r2 = capture(base + " replay --config " + cfg + " --replicate 3 --t-index 2");
  EXPECT_EQ(r1, r2);
  const auto json = nlohmann::json::parse(r1);
  EXPECT_EQ(json["seed"]["replicate_index"], 3);
  EXPECT_EQ(json["t"], 0.0025);
  fs::remove_all(dir);
}
#endif

} // namespace
