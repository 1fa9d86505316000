#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "commands.hpp"
#include "nhm/core.hpp"

extern char** environ;

namespace {

enum Exit { ok = 0, io_error = 1, config_error = 2, numerical_error = 3, check_failed = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace nhm::cli;
  CLI::App app{"Lattice sums, band topology, ribbons and dipole-array scattering"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir = ".", env_prefix = "NHM_";
  int workers = 0;
  bool check = false;
  std::vector<std::string> assignments;
  app.add_option("--config", config_path, "YAML config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--check", check, "verify stored outputs against the config instead of running");
  app.add_option("--set", assignments, "override a config key, key=value");
  app.add_option("--env-prefix", env_prefix, "prefix of environment overrides");
  app.set_version_flag("--version", NHM_VERSION);
  for (const auto& name : command_names()) app.add_subcommand(name)->fallthrough();
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  Config cfg;
  Job job;
  try {
    if (!config_path.empty()) cfg = Config::from_file(config_path);
    cfg.apply_env(env_prefix, environ);
    for (const auto& a : assignments) cfg.apply_assignment(a, "--set " + a);
    job = prepare(command, cfg);
    std::set<std::string> known;
    for (const auto& k : config_schema()) known.insert(k.key);
    cfg.reject_unknown(known);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return config_error;
  }
  const std::string hash = cfg.hash(command);

  if (check) {
    CheckResult r = check_job(out_dir, command, hash);
    for (const auto& p : r.problems) std::cerr << command << ": check: " << p << "\n";
    if (!r.ok) return check_failed;
    std::cout << command << ": check ok " << hash << "\n";
    return ok;
  }

#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
  const int used_workers = omp_get_max_threads();
#else
  const int used_workers = 1;
#endif

  const auto t0 = std::chrono::steady_clock::now();
  JobOutput out;
  try {
    out = job();
  } catch (const nhm::Error& e) {
    std::cerr << command << ": " << module_of(command) << ": " << e.what() << "\n";
    return numerical_error;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunInfo info{command, config_path.empty() ? "<none>" : config_path, hash, cfg.echo(), used_workers, wall};
  try {
    write_job(out_dir, info, out);
  } catch (const std::exception& e) {
    std::cerr << command << ": output: " << e.what() << "\n";
    return io_error;
  }
  return ok;
}
