// sepsim: batch runner for exclusion-process current experiments.
//
//   sepsim run config.json [--out DIR] [--seed S] [--threads N] [--serial]
//   sepsim verify identities|rayleigh|na|clt|all [--grid grid.json] [--out DIR]
//   sepsim kernels list

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "sep/experiment.hpp"
#include "sep/kernel.hpp"
#include "sep/report_io.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sep::SepError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw sep::SepError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetric exclusion current: exact duality, stirring Monte Carlo, checks"};
  app.require_subcommand(1);

  int threads = 0;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed, overrides the config");

  auto* run_cmd = app.add_subcommand("run", "run an experiment described by a JSON config");
  std::string config_path;
  bool serial = false;
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_flag("--serial", serial, "use the serial reference kernels");
  run_cmd->fallthrough();

  auto* verify_cmd = app.add_subcommand("verify", "run a property suite over the preset grid");
  std::string suite;
  std::string grid_path;
  verify_cmd->add_option("suite", suite, "identities, rayleigh, na, clt or all")->required();
  verify_cmd->add_option("--grid", grid_path, "JSON file overriding the preset grid");
  verify_cmd->fallthrough();

  auto* kernels_cmd = app.add_subcommand("kernels", "kernel presets");
  auto* list_cmd = kernels_cmd->add_subcommand("list", "list kernel presets");
  kernels_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*run_cmd) {
      auto doc = load_json(config_path);
      if (out_dir) {
        if (!doc.is_object()) throw sep::ConfigError("config", "expected an object");
        doc["outputs"]["dir"] = *out_dir;
      }
      if (seed) doc["seed"] = *seed;
      const auto config = sep::parse_config(doc);
      sep::RunOptions opts;
      opts.exec = serial ? sep::Execution::serial : sep::Execution::parallel;
      const auto outcome = sep::run(config, opts);
      for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
      for (const auto& w : outcome.summary["warnings"]) {
        std::cerr << "warning: " << w.get<std::string>() << '\n';
      }
      if (outcome.exit_status != 0) std::cerr << "one or more exact checks failed\n";
      return outcome.exit_status;
    }

    if (*verify_cmd) {
      sep::PresetGrid grid;
      if (!grid_path.empty()) grid = sep::parse_grid(load_json(grid_path));
      if (seed) grid.ic_seed = *seed;
      const auto outcome = sep::verify(suite, grid);
      const std::filesystem::path dir = out_dir.value_or(".");
      sep::OutputFile manifest(dir / ("verify_" + suite + ".json"));
      sep::write_json_document(manifest.stream(), outcome.manifest);
      manifest.commit();
      for (const auto& w : outcome.manifest["warnings"]) {
        std::cerr << "warning: " << w.get<std::string>() << '\n';
      }
      for (const auto& f : outcome.manifest["failures"]) {
        std::cout << "FAIL " << f["suite"].get<std::string>() << ' '
                  << f["instance"].get<std::string>() << ' ' << f["check"].get<std::string>()
                  << " lhs=" << f["lhs"] << " rhs=" << f["rhs"] << '\n';
      }
      std::cout << (outcome.passed() ? "PASS" : "FAIL") << ' ' << suite << ": " << outcome.checks
                << " checks, " << outcome.failed << " failed (manifest " << manifest.path().string()
                << ")\n";
      return outcome.passed() ? 0 : 1;
    }

    if (*list_cmd) {
      for (const auto& p : sep::kernel_presets()) {
        std::cout << p.name << "\n  parameters: " << p.parameters << "\n  " << p.description << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
