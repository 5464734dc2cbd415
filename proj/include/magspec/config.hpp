#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "magspec/field.hpp"
#include "magspec/grid.hpp"
#include "magspec/hamiltonian.hpp"

namespace magspec {

using Json = nlohmann::json;

struct FieldSpec {
  std::string kind = "constant";  // constant | periodic | tabulated
  double amplitude = 1.0;
  std::vector<double> samples;  // periodic
  int m1 = 0, m2 = 0;
  double period1 = 0.0, period2 = 0.0;
  std::string csv;  // tabulated, resolved against the config file's directory
};

struct BackgroundSpec {
  double well_omega = 0.0;  // harmonic well, off when 0
  double well_cutoff = 0.0;
  double cosine_amplitude = 0.0;  // V += a cos(2πx1/P) cos(2πx2/P)
  double cosine_period = 0.0;
  double vector_amplitude = 0.0;  // 𝒜 = a (sin(2πx2/P), sin(2πx1/P))
  double vector_period = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Energies below are absolute (already multiplied by b0 when energy_unit is "b0"),
// perturbation strengths likewise absolute.

struct SpectrumSection {
  int count = 0;  // 0: full spectrum
  double cluster_gap = 0.0;  // eigenvalues closer than this form a cluster; 0: no grouping
};

struct ProjectionSection {
  Interval island;
  double window = 0.0;  // decay-fit half-width, 0: quarter of the shorter side
  bool landau_check = false;
  double landau_reach = 2.0;  // in magnetic lengths
};

struct ChainSection {
  std::vector<double> epsilons;
  double fermi_energy = 0.0;
  int nodes = 8;
  double decay_window = 0.0;  // 0: 0.45 of the shorter side
};

struct TraceSection {
  double epsilon = 0.0;
  double fermi_energy = 0.0;
  std::vector<double> windows;
};

struct GcmptSection {
  std::optional<ChainSection> chain;
  std::optional<TraceSection> trace;
};

struct TorusSweepSpec {
  int n = 0;  // 0: the main grid
  std::vector<int> flux_quanta;
  Interval gap;  // relative: a1 = lo·max b, a2 = hi·min b
};

struct OracleSpec {
  int n = 24;
  int flux_quanta = 0;
  int mesh = 6;
  int band_count = 0;  // 0: flux_quanta
};

struct ChernSection {
  std::optional<double> fermi_energy;
  std::vector<double> windows;
  std::optional<OracleSpec> oracle;
  std::optional<TorusSweepSpec> ids;
};

struct GapSweepSection {
  std::vector<double> epsilons;
  Interval gap;
  Interval island;
};

struct StrongSpec {
  int box = 0;
  std::vector<double> epsilons;
  double fermi_energy = 0.0;
};

struct TrendSpec {
  std::vector<int> boxes;
  double epsilon = 0.0;
  double fermi_energy = 0.0;
};

struct DerivativeSpec {
  std::vector<double> epsilons;
  Interval island;
};

struct ContinuitySection {
  std::optional<StrongSpec> strong;
  std::optional<TrendSpec> trend;
  std::optional<DerivativeSpec> derivative;
};

struct EigPerturbSection {
  std::vector<double> epsilons;
  int index = 0;
};

struct DecayFitSection {
  std::string kernel = "projection";  // projection | resolvent
  Interval island;
  double z_re = 0.0, z_im = 0.0;
  double window = 0.0;
  bool from_peak = false;
};

struct ExperimentConfig {
  Json document;  // fully merged input, embedded in manifests
  std::string preset;
  GridSpec grid;
  FieldSpec field;
  BackgroundSpec background;
  double b0 = 0.0;
  std::optional<int> flux_quanta;
  int quad_order = kDefaultQuadOrder;
  std::uint64_t seed = 1;

  std::optional<SpectrumSection> spectrum;
  std::optional<ProjectionSection> projection;
  std::optional<GcmptSection> gcmpt;
  std::optional<ChernSection> chern;
  std::optional<TorusSweepSpec> ids_sweep;
  std::optional<GapSweepSection> gap_sweep;
  std::optional<ContinuitySection> continuity;
  std::optional<EigPerturbSection> eig_perturb;
  std::optional<DecayFitSection> decay_fit;
};

const std::vector<std::string>& preset_names();
// Raw JSON of a shipped preset; ConfigError for unknown names.
Json preset_document(const std::string& name);

// Validates and scales a document. A "preset" key merges the document over the named
// preset (RFC 7386). A manifest written by the CLI is accepted and its embedded config used.
// `base_dir` resolves relative file paths. Throws ConfigError (schema) or PreconditionError
// (torus flux not quantized).
ExperimentConfig parse_config(const Json& document, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& preset = std::nullopt);
ExperimentConfig load_preset(const std::string& name);

// FNV-1a over the compact, key-sorted dump.
std::string config_hash(const Json& document);

FieldProfile build_profile(const FieldSpec& spec);
BackgroundPotential build_background(const BackgroundSpec& spec);
ModelPtr build_model(const ExperimentConfig& cfg);
// Same field and background on another grid.
ModelPtr build_model(const ExperimentConfig& cfg, const GridSpec& grid);

}  // namespace magspec
