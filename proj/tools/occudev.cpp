// Command-line front end:
//   occudev <experiment> --config <path> [--seed S] [--threads K] [--out DIR]
//   occudev replay --config <path> --replicate <i> [--t-index j]

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "occudev/occudev.hpp"

namespace {

occudev::ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw occudev::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return occudev::parse_config(text.str());
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Occupation-time deviation experiments for Brownian motion near a hypersurface"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  bool quiet = false;

  for (auto name : occudev::kExperiments) {
    auto *sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " experiment");
    sub->add_option("--config", config_path, "JSON configuration")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads, 0 = auto (OCCUDEV_THREADS)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_flag("--quiet", quiet, "no progress lines");
  }

  std::uint64_t replicate = 0;
  std::size_t t_index = 0;
  auto *replay = app.add_subcommand("replay", "re-run one replication and print it as JSON");
  replay->add_option("--config", config_path, "JSON configuration")->required();
  replay->add_option("--replicate", replicate, "replicate index")->required();
  replay->add_option("--t-index", t_index, "index into t_grid");
  replay->add_option("--seed", seed, "master seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : occudev::kExitConfig;
  }

  const CLI::App *chosen = app.get_subcommands().front();
  try {
    occudev::ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (chosen == replay) {
      const auto sample = occudev::replay(cfg, replicate, t_index);
      const double h = occudev::detail::effective_curvature(cfg);
      std::cout << occudev::sample_to_json(sample, h).dump() << "\n";
      return sample.flagged ? occudev::kExitNumerical : occudev::kExitOk;
    }
    cfg.experiment = chosen->get_name();
    if (threads) cfg.threads = *threads;
    if (out_dir) cfg.output_dir = *out_dir;
    return occudev::run(cfg, std::cout, quiet ? nullptr : &std::cerr);
  } catch (const occudev::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return occudev::kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return occudev::kExitNumerical;
  }
}
