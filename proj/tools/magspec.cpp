#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "magspec/config.hpp"
#include "magspec/error.hpp"
#include "magspec/experiments.hpp"

#ifndef MAGSPEC_VERSION
#define MAGSPEC_VERSION "0.0.0"
#endif

using namespace magspec;

namespace {

Json versions() {
  return {{"magspec", MAGSPEC_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

int fail(int code, const std::string& kind, const std::string& message, const std::string& reason = {}) {
  Json err{{"error", kind}, {"message", message}, {"exit_code", code}};
  if (!reason.empty()) err["reason"] = reason;
  std::cerr << "magspec: " << kind << (reason.empty() ? "" : " (" + reason + ")") << ": " << message << '\n';
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for magnetic Schrödinger operators"};
  app.require_subcommand(0, 1);
  std::string config_path, out_dir;
  std::optional<std::string> preset;
  std::optional<int> workers;
  bool list = false;
  app.add_flag("--list-presets", list, "Print the shipped preset names and exit");

  for (const std::string& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Experiment config (JSON) or a manifest written by an earlier run");
    sub->add_option("--out", out_dir, "Directory for CSV/JSON/SVG artifacts");
    sub->add_option("--workers", workers, "BLAS threads (default: MAGSPEC_WORKERS, else all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--preset", preset, "Start from a shipped preset");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list) {
    for (const auto& name : preset_names()) std::cout << name << '\n';
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    set_workers(workers ? *workers : default_workers());
    if (config_path.empty() && !preset) throw ConfigError("--config or --preset is required");
    const ExperimentConfig cfg = load_config(config_path, preset);
    const std::string hash = config_hash(cfg.document);

    const auto start = std::chrono::steady_clock::now();
    Artifacts out(out_dir);
    Json report = run_experiment(subcommand, cfg, out);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Json results{{"subcommand", subcommand}, {"config_hash", hash}, {"seed", cfg.seed}, {"report", report}};
    if (!out_dir.empty()) {
      out.json("results.json", results);
      Json manifest{{"subcommand", subcommand},
                    {"config", cfg.document},
                    {"config_hash", hash},
                    {"seed", cfg.seed},
                    {"versions", versions()},
                    {"timings", {{"total_seconds", seconds}}},
                    {"workers", workers ? *workers : default_workers()},
                    {"artifacts", out.written()}};
      out.json("manifest.json", manifest);
    }
    std::cout << results.dump(2) << '\n';
    return 0;
  } catch (const ConfigError& e) {
    return fail(2, "config_error", e.what());
  } catch (const PreconditionError& e) {
    return fail(3, "precondition_failed", e.what(), e.reason());
  } catch (const NumericalError& e) {
    return fail(4, "numerical_failure", e.what());
  } catch (const std::exception& e) {
    return fail(1, "io_error", e.what());
  }
}
