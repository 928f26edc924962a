#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sep/generator.hpp"
#include "sep/kernel.hpp"

namespace sep {

/// Validation failure; the message starts with the offending field path,
/// e.g. "kernel.alpha: tail index must exceed 1".
class ConfigError : public SepError {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : SepError(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct KernelSpec {
  std::string preset = "nearest_neighbor";
  double rate = 1.0;             // nearest_neighbor
  double alpha = 1.5;            // heavy_tail
  std::size_t cutoff = 0;        // heavy_tail, 0 = window span
  double epsilon = 0.2;          // random_environment
  std::uint64_t env_seed = 1;    // random_environment
};

struct InitialSpec {
  std::string type = "step";  // step | product | explicit
  double rho = 0.5;
  std::uint64_t seed = 1;
  std::vector<int> occupation;
};

enum class Mode { exact, mc, both };

struct Tolerances {
  double semigroup = 1e-10;
  double quadrature = 1e-8;
  double tol_im = 1e-7;
  double event_budget = 1e8;
};

struct OutputSpec {
  std::string dir = ".";
  std::string summary = "summary.json";
  std::string samples = "samples.csv";
  std::string reports = "reports.csv";
};

struct ExperimentConfig {
  KernelSpec kernel;
  Site window_first = 0;
  Site window_last = 1;
  Site split = 0;
  std::optional<std::vector<Site>> a_sites;
  InitialSpec initial;
  std::vector<double> t_grid;
  Mode mode = Mode::exact;
  std::size_t n_replicas = 10000;
  std::size_t n_max = 12;
  Tolerances tolerances;
  OutputSpec outputs;
  std::uint64_t seed = 0;

  std::size_t window_size() const {
    return static_cast<std::size_t>(window_last - window_first + 1);
  }
};

/// Parses and validates a config document. Unknown keys are rejected so that
/// typos do not silently fall back to defaults.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// The config with every default materialized; parse_config(resolved) gives
/// back the same config.
nlohmann::json resolved_config(const ExperimentConfig& config);

RateKernel build_kernel(const KernelSpec& spec, const SiteWindow& window);

struct RunOptions {
  Execution exec = Execution::parallel;
};

struct RunOutcome {
  int exit_status = 0;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

/// Executes the pipeline and writes summary.json, samples.csv and
/// reports.csv under config.outputs.dir. On an exception every file that
/// was opened stays under its `.partial` name and the exception propagates.
RunOutcome run(const ExperimentConfig& config, const RunOptions& options = {});

/// Instance grid for the property suites.
struct PresetGrid {
  std::vector<std::string> presets{"nearest_neighbor", "heavy_tail", "random_environment"};
  std::vector<std::size_t> windows{6, 8};
  std::vector<std::string> initials{"step", "product"};
  std::vector<double> times{0.1, 0.5, 1.0, 5.0};
  double rho = 0.5;
  std::uint64_t ic_seed = 7;
  std::uint64_t env_seed = 11;
  double alpha = 1.5;
  double epsilon = 0.2;
  bool empty() const {
    return presets.empty() || windows.empty() || initials.empty() || times.empty();
  }
};

PresetGrid parse_grid(const nlohmann::json& doc);
nlohmann::json grid_to_json(const PresetGrid& grid);

/// One instance of the grid, materialized.
struct GridInstance {
  std::string label;
  RateKernel kernel;
  Configuration eta;
  Partition partition;
  double t;
};

std::vector<GridInstance> grid_instances(const PresetGrid& grid);

const std::vector<std::string>& verify_suites();

struct VerifyOutcome {
  std::size_t checks = 0;
  std::size_t failed = 0;
  /// {schema_version, suite, grid, checks, failed, failures, warnings}
  nlohmann::json manifest;
  bool passed() const { return failed == 0; }
};

/// Runs a named suite (identities, rayleigh, na, clt, all) over the grid.
/// Throws SepError listing the valid names for an unknown suite.
VerifyOutcome verify(const std::string& suite, const PresetGrid& grid = {});

}  // namespace sep
