#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "rwre/config.hpp"
#include "rwre/error.hpp"
#include "rwre/experiments.hpp"
#include "rwre/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rwre - random walks in random environments, experiment driver"};
  app.set_version_flag("--version", std::string(rwre::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "experiment config (INI)")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber);

  std::string name;
  auto* describe = app.add_subcommand("describe", "print an experiment's config schema and background");
  describe->add_option("name", name, "experiment name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*describe) {
      std::cout << rwre::describe_experiment(name);
      return 0;
    }
    rwre::set_thread_count(threads);
    rwre::RunOptions options;
    if (!out_dir.empty()) options.out = out_dir;
    if (const char* env_seed = std::getenv("RWRE_SEED")) {
      try {
        std::size_t used = 0;
        options.seed_override = std::stoull(env_seed, &used);
        if (used != std::string(env_seed).size()) throw std::invalid_argument(env_seed);
      } catch (const std::exception&) {
        throw rwre::Error(rwre::ErrorCode::ConfigError, std::string("RWRE_SEED is not an integer: ") + env_seed);
      }
    }
    const auto config = rwre::Config::load(config_path);
    const auto result = rwre::run_experiment(config, options);
    std::cout << rwre::to_string(result.status) << ' ' << result.report["experiment"].get<std::string>() << ": "
              << result.summary << " [" << result.out_dir.string() << "]\n";
    return result.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "rwre: " << e.what() << '\n';
    return 1;
  }
}
