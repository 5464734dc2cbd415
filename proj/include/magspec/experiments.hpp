#pragma once

#include <string>
#include <vector>

#include "magspec/config.hpp"
#include "magspec/io.hpp"

namespace magspec {

// Collects CSV/SVG outputs of a run. With an empty directory nothing is written.
class Artifacts {
 public:
  explicit Artifacts(std::string dir = {}) : dir_(std::move(dir)) {}
  void csv(const std::string& name, const Table& table);
  void svg(const std::string& name, const PlotSpec& plot);
  void json(const std::string& name, const Json& report);
  const std::vector<std::string>& written() const { return written_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string path(const std::string& name);
  std::string dir_;
  std::vector<std::string> written_;
};

const std::vector<std::string>& subcommands();

// Dispatches on the subcommand name; the config must carry the matching section.
Json run_experiment(const std::string& subcommand, const ExperimentConfig& cfg, Artifacts& out);

Json run_spectrum(const ExperimentConfig& cfg, Artifacts& out);
Json run_projection(const ExperimentConfig& cfg, Artifacts& out);
Json run_gcmpt(const ExperimentConfig& cfg, Artifacts& out);
Json run_chern(const ExperimentConfig& cfg, Artifacts& out);
Json run_ids_sweep(const ExperimentConfig& cfg, Artifacts& out);
Json run_gap_sweep(const ExperimentConfig& cfg, Artifacts& out);
Json run_continuity(const ExperimentConfig& cfg, Artifacts& out);
Json run_eig_perturb(const ExperimentConfig& cfg, Artifacts& out);
Json run_decay_fit(const ExperimentConfig& cfg, Artifacts& out);

// Thread count for the BLAS backend.
void set_workers(int workers);
int default_workers();

}  // namespace magspec
