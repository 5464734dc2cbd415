#include "magspec/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "magspec/error.hpp"
#include "presets.hpp"

namespace magspec {

namespace {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_number()) fail(at(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(at(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0)) fail(at(key), "must be positive");
    return x;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  int integer(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_number_integer()) fail(at(key), "must be an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = get(key);
    if (!v.is_string()) fail(at(key), "must be a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = get(key);
    if (!v.is_boolean()) fail(at(key), "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_array() || v.empty()) fail(at(key), "must be a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(at(key), "must contain numbers only");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_array() || v.empty()) fail(at(key), "must be a nonempty array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail(at(key), "must contain integers only");
      out.push_back(e.get<int>());
    }
    return out;
  }

  Interval interval(const std::string& key) {
    const std::vector<double> v = numbers(key);
    if (v.size() != 2 || !(v[0] < v[1])) fail(at(key), "must be [lo, hi] with lo < hi");
    return {v[0], v[1]};
  }

  Reader child(const std::string& key) {
    if (!has(key)) fail(at(key), "is required");
    used_.insert(key);
    return Reader(j_.at(key), at(key));
  }

  // Rejects keys nobody asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: '" + where + "' " + what);
  }

 private:
  const Json& get(const std::string& key) {
    if (!has(key)) fail(at(key), "is required");
    used_.insert(key);
    return j_.at(key);
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

struct Units {
  double energy = 1.0;
  double epsilon = 1.0;
};

std::vector<double> epsilons(Reader& r, const std::string& key, const Units& u) {
  std::vector<double> e = r.numbers(key);
  for (double& x : e) {
    if (x == 0.0) Reader::fail(r.at(key), "must not contain 0");
    x *= u.epsilon;
  }
  return e;
}

std::vector<double> windows(Reader& r, const std::string& key) {
  std::vector<double> w = r.numbers(key);
  for (double x : w)
    if (!(x > 0)) Reader::fail(r.at(key), "must contain positive half-widths");
  return w;
}

Interval energies(Reader& r, const std::string& key, const Units& u) {
  const Interval i = r.interval(key);
  return {i.lo * u.energy, i.hi * u.energy};
}

TorusSweepSpec torus_sweep(Reader r) {
  TorusSweepSpec s;
  s.n = r.integer("n", 0);
  s.flux_quanta = r.integers("flux_quanta");
  if (s.flux_quanta.size() < 2) Reader::fail(r.at("flux_quanta"), "needs at least two entries");
  for (int p : s.flux_quanta)
    if (p <= 0) Reader::fail(r.at("flux_quanta"), "must be positive");
  s.gap = r.interval("gap");
  r.finish();
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, text] : detail::embedded_presets()) n.emplace_back(name);
    return n;
  }();
  return names;
}

Json preset_document(const std::string& name) {
  for (const auto& [key, text] : detail::embedded_presets())
    if (key == name) return Json::parse(text.begin(), text.end());
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

std::string config_hash(const Json& document) {
  const std::string text = document.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const Json& input, const std::string& base_dir) {
  Json doc = input;
  if (doc.is_object() && doc.contains("config_hash") && doc.contains("config")) doc = Json(doc.at("config"));
  if (!doc.is_object()) Reader::fail("config", "must be a JSON object");
  if (doc.contains("preset")) {
    if (!doc.at("preset").is_string()) Reader::fail("preset", "must be a string");
    const std::string name = doc.at("preset").get<std::string>();
    Json merged = preset_document(name);
    Json patch = doc;
    patch.erase("preset");
    merged.merge_patch(patch);
    merged["preset"] = name;
    doc = std::move(merged);
  }

  ExperimentConfig cfg;
  cfg.document = doc;
  Reader root(cfg.document, "");
  cfg.preset = root.string("preset", "");
  root.string("description", "");

  {
    Reader g = root.child("grid");
    cfg.grid.n1 = g.integer("n1");
    cfg.grid.n2 = g.integer("n2", cfg.grid.n1);
    cfg.grid.h = g.positive("h", 1.0);
    const std::string geom = g.string("geometry", "dirichlet");
    if (geom == "torus") {
      cfg.grid.geometry = Geometry::torus;
    } else if (geom == "dirichlet") {
      cfg.grid.geometry = Geometry::dirichlet;
    } else {
      Reader::fail(g.at("geometry"), "must be \"torus\" or \"dirichlet\"");
    }
    if (cfg.grid.n1 < 8 || cfg.grid.n2 < 8) Reader::fail("grid", "needs at least 8 sites per axis");
    g.finish();
  }

  if (root.has("field")) {
    Reader f = root.child("field");
    cfg.field.kind = f.string("kind", "constant");
    if (cfg.field.kind == "constant") {
      cfg.field.amplitude = f.number("amplitude", 1.0);
    } else if (cfg.field.kind == "periodic") {
      cfg.field.samples = f.numbers("samples");
      cfg.field.m1 = f.integer("m1");
      cfg.field.m2 = f.integer("m2");
      cfg.field.period1 = f.positive("period1");
      cfg.field.period2 = f.positive("period2");
      if (cfg.field.m1 <= 0 || cfg.field.m2 <= 0 ||
          cfg.field.samples.size() != static_cast<std::size_t>(cfg.field.m1) * cfg.field.m2)
        Reader::fail(f.at("samples"), "must hold m1·m2 values");
    } else if (cfg.field.kind == "tabulated") {
      const std::filesystem::path p(f.string("csv", ""));
      if (p.empty()) Reader::fail(f.at("csv"), "is required for a tabulated field");
      cfg.field.csv = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    } else {
      Reader::fail(f.at("kind"), "must be constant, periodic or tabulated");
    }
    f.finish();
  }

  if (root.has("background")) {
    Reader b = root.child("background");
    if (b.has("harmonic_well")) {
      Reader w = b.child("harmonic_well");
      cfg.background.well_omega = w.positive("omega");
      cfg.background.well_cutoff = w.positive("cutoff");
      w.finish();
    }
    if (b.has("cosine")) {
      Reader c = b.child("cosine");
      cfg.background.cosine_amplitude = c.number("amplitude");
      cfg.background.cosine_period = c.positive("period");
      c.finish();
    }
    if (b.has("vector")) {
      Reader v = b.child("vector");
      cfg.background.vector_amplitude = v.number("amplitude");
      cfg.background.vector_period = v.positive("period");
      v.finish();
    }
    b.finish();
  }

  cfg.quad_order = root.integer("quad_order", kDefaultQuadOrder);
  if (cfg.quad_order < 2 || cfg.quad_order > 128) Reader::fail("quad_order", "must lie in [2, 128]");
  {
    const int seed = root.integer("seed", 1);
    if (seed < 0) Reader::fail("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }

  const Grid grid(cfg.grid);
  const FieldProfile profile = build_profile(cfg.field);
  if (root.has("flux_quanta")) {
    if (root.has("b0")) Reader::fail("b0", "conflicts with flux_quanta");
    if (cfg.grid.geometry != Geometry::torus) Reader::fail("flux_quanta", "needs torus geometry");
    cfg.flux_quanta = root.integer("flux_quanta");
    cfg.b0 = admissible_field(grid, profile, *cfg.flux_quanta);
  } else {
    cfg.b0 = root.number("b0");
    if (cfg.b0 < 0) Reader::fail("b0", "must be nonnegative");
  }

  Units units;
  const std::string energy_unit = root.string("energy_unit", "absolute");
  if (energy_unit == "b0") {
    units.energy = cfg.b0;
  } else if (energy_unit != "absolute") {
    Reader::fail("energy_unit", "must be \"absolute\" or \"b0\"");
  }
  const std::string epsilon_unit = root.string("epsilon_unit", "absolute");
  if (epsilon_unit == "b0") {
    units.epsilon = cfg.b0;
  } else if (epsilon_unit == "flux_quanta") {
    if (cfg.grid.geometry != Geometry::torus) Reader::fail("epsilon_unit", "flux_quanta needs torus geometry");
    units.epsilon = torus_flux_unit(grid, profile);
  } else if (epsilon_unit != "absolute") {
    Reader::fail("epsilon_unit", "must be \"absolute\", \"b0\" or \"flux_quanta\"");
  }
  if ((energy_unit == "b0" || epsilon_unit == "b0") && cfg.b0 == 0.0) Reader::fail("b0", "must be positive when used as a unit");

  std::vector<double> main_fields = {cfg.b0};
  auto perturbed = [&](const std::vector<double>& eps, bool both_signs = false) {
    for (double e : eps) {
      main_fields.push_back(cfg.b0 + e);
      if (both_signs) main_fields.push_back(cfg.b0 - e);
    }
  };

  if (root.has("spectrum")) {
    Reader s = root.child("spectrum");
    SpectrumSection sec;
    sec.count = s.integer("count", 0);
    if (sec.count < 0) Reader::fail(s.at("count"), "must be nonnegative");
    sec.cluster_gap = s.positive("cluster_gap", 0.0) * units.energy;
    s.finish();
    cfg.spectrum = sec;
  }

  if (root.has("projection")) {
    Reader s = root.child("projection");
    ProjectionSection sec;
    sec.island = energies(s, "island", units);
    sec.window = s.positive("window", 0.0);
    sec.landau_check = s.boolean("landau_check", false);
    sec.landau_reach = s.positive("landau_reach", 2.0);
    s.finish();
    cfg.projection = sec;
  }

  if (root.has("gcmpt")) {
    Reader s = root.child("gcmpt");
    GcmptSection sec;
    if (s.has("chain")) {
      Reader c = s.child("chain");
      ChainSection ch;
      ch.epsilons = epsilons(c, "epsilons", units);
      ch.fermi_energy = c.number("fermi_energy") * units.energy;
      ch.nodes = c.integer("nodes", 8);
      if (ch.nodes < 4) Reader::fail(c.at("nodes"), "must be at least 4");
      ch.decay_window = c.positive("decay_window", 0.0);
      c.finish();
      perturbed(ch.epsilons);
      sec.chain = ch;
    }
    if (s.has("trace")) {
      Reader t = s.child("trace");
      TraceSection tr;
      tr.epsilon = t.number("epsilon") * units.epsilon;
      if (tr.epsilon == 0.0) Reader::fail(t.at("epsilon"), "must not be 0");
      tr.fermi_energy = t.number("fermi_energy") * units.energy;
      tr.windows = windows(t, "windows");
      t.finish();
      perturbed({tr.epsilon});
      sec.trace = tr;
    }
    if (!sec.chain && !sec.trace) Reader::fail("gcmpt", "needs a chain or trace section");
    s.finish();
    cfg.gcmpt = sec;
  }

  if (root.has("chern")) {
    Reader s = root.child("chern");
    ChernSection sec;
    if (s.has("fermi_energy")) sec.fermi_energy = s.number("fermi_energy") * units.energy;
    if (s.has("windows")) sec.windows = windows(s, "windows");
    if (sec.fermi_energy.has_value() != !sec.windows.empty())
      Reader::fail("chern", "fermi_energy and windows go together");
    if (s.has("oracle")) {
      Reader o = s.child("oracle");
      OracleSpec os;
      os.n = o.integer("n", 24);
      os.flux_quanta = o.integer("flux_quanta");
      os.mesh = o.integer("mesh", 6);
      os.band_count = o.integer("band_count", 0);
      if (os.n < 8 || os.flux_quanta <= 0 || os.mesh < 2 || os.band_count < 0)
        Reader::fail("chern.oracle", "needs n ≥ 8, flux_quanta > 0, mesh ≥ 2");
      o.finish();
      sec.oracle = os;
    }
    if (s.has("ids")) sec.ids = torus_sweep(s.child("ids"));
    s.finish();
    cfg.chern = sec;
  }

  if (root.has("ids_sweep")) {
    cfg.ids_sweep = torus_sweep(root.child("ids_sweep"));
    if (cfg.ids_sweep->n == 0 && cfg.grid.geometry != Geometry::torus)
      Reader::fail("ids_sweep", "on a Dirichlet grid needs its own torus size n");
  }

  if (root.has("gap_sweep")) {
    Reader s = root.child("gap_sweep");
    GapSweepSection sec;
    sec.epsilons = epsilons(s, "epsilons", units);
    sec.gap = energies(s, "gap", units);
    sec.island = energies(s, "island", units);
    s.finish();
    perturbed(sec.epsilons);
    cfg.gap_sweep = sec;
  }

  if (root.has("continuity")) {
    Reader s = root.child("continuity");
    ContinuitySection sec;
    if (s.has("strong")) {
      Reader t = s.child("strong");
      StrongSpec st;
      st.box = t.integer("box", 0);
      st.epsilons = epsilons(t, "epsilons", units);
      st.fermi_energy = t.number("fermi_energy") * units.energy;
      t.finish();
      if (st.box == 0) perturbed(st.epsilons);
      sec.strong = st;
    }
    if (s.has("trend")) {
      Reader t = s.child("trend");
      TrendSpec tr;
      tr.boxes = t.integers("boxes");
      for (int b : tr.boxes)
        if (b < 8) Reader::fail(t.at("boxes"), "box sizes must be at least 8");
      tr.epsilon = t.number("epsilon") * units.epsilon;
      tr.fermi_energy = t.number("fermi_energy") * units.energy;
      t.finish();
      sec.trend = tr;
    }
    if (s.has("derivative")) {
      Reader t = s.child("derivative");
      DerivativeSpec d;
      d.epsilons = epsilons(t, "epsilons", units);
      d.island = energies(t, "island", units);
      t.finish();
      perturbed(d.epsilons, true);
      sec.derivative = d;
    }
    s.finish();
    cfg.continuity = sec;
  }

  if (root.has("eig_perturb")) {
    Reader s = root.child("eig_perturb");
    EigPerturbSection sec;
    sec.epsilons = epsilons(s, "epsilons", units);
    sec.index = s.integer("index", 0);
    if (sec.index < 0) Reader::fail(s.at("index"), "must be nonnegative");
    s.finish();
    perturbed(sec.epsilons);
    cfg.eig_perturb = sec;
  }

  if (root.has("decay_fit")) {
    Reader s = root.child("decay_fit");
    DecayFitSection sec;
    sec.kernel = s.string("kernel", "projection");
    if (sec.kernel == "projection") {
      sec.island = energies(s, "island", units);
    } else if (sec.kernel == "resolvent") {
      const std::vector<double> z = s.numbers("z");
      if (z.size() != 2) Reader::fail(s.at("z"), "must be [re, im]");
      sec.z_re = z[0] * units.energy;
      sec.z_im = z[1] * units.energy;
    } else {
      Reader::fail(s.at("kernel"), "must be \"projection\" or \"resolvent\"");
    }
    sec.window = s.positive("window", 0.0);
    sec.from_peak = s.boolean("from_peak", false);
    s.finish();
    cfg.decay_fit = sec;
  }

  root.finish();

  // Every field strength that will be assembled on the main torus must be quantized.
  if (cfg.grid.geometry == Geometry::torus)
    for (double b : main_fields) check_torus_flux(grid, profile, b);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& preset) {
  Json doc;
  std::string base = ".";
  if (!path.empty()) {
    try {
      doc = Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
      throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) base = parent.string();
  } else if (!preset) {
    throw ConfigError("either a config file or a preset is required");
  } else {
    doc = Json::object();
  }
  if (preset) {
    if (!doc.is_object()) Reader::fail("config", "must be a JSON object");
    if (doc.contains("config_hash") && doc.contains("config")) doc = Json(doc.at("config"));
    if (doc.contains("preset") && doc.at("preset") != *preset)
      throw ConfigError("--preset " + *preset + " conflicts with the config's preset " + doc.at("preset").dump());
    doc["preset"] = *preset;
  }
  return parse_config(doc, base);
}

ExperimentConfig load_preset(const std::string& name) { return parse_config(Json{{"preset", name}}); }

FieldProfile build_profile(const FieldSpec& spec) {
  if (spec.kind == "periodic")
    return FieldProfile::periodic(spec.samples, spec.m1, spec.m2, spec.period1, spec.period2);
  if (spec.kind == "tabulated") return FieldProfile::from_csv(spec.csv);
  return FieldProfile::constant(spec.amplitude);
}

BackgroundPotential build_background(const BackgroundSpec& spec) {
  BackgroundPotential bg;
  std::vector<std::function<double(Point)>> scalars;
  std::string label;
  if (spec.well_omega > 0) {
    BackgroundPotential well = harmonic_well(spec.well_omega, spec.well_cutoff);
    scalars.push_back(well.scalar);
    label = well.label;
  }
  if (spec.cosine_amplitude != 0.0) {
    const double a = spec.cosine_amplitude, k = 2.0 * M_PI / spec.cosine_period;
    scalars.push_back([a, k](Point x) { return a * std::cos(k * x.x1) * std::cos(k * x.x2); });
    label += label.empty() ? "cosine" : "+cosine";
  }
  if (!scalars.empty()) {
    bg.scalar = [scalars](Point x) {
      double v = 0.0;
      for (const auto& f : scalars) v += f(x);
      return v;
    };
  }
  if (spec.vector_amplitude != 0.0) {
    const double a = spec.vector_amplitude, k = 2.0 * M_PI / spec.vector_period;
    bg.vector_potential = [a, k](Point x) { return Point{a * std::sin(k * x.x2), a * std::sin(k * x.x1)}; };
    label += label.empty() ? "vector" : "+vector";
  }
  if (!label.empty()) bg.label = label;
  return bg;
}

ModelPtr build_model(const ExperimentConfig& cfg) { return build_model(cfg, cfg.grid); }

ModelPtr build_model(const ExperimentConfig& cfg, const GridSpec& grid) {
  return make_model(grid, build_profile(cfg.field), build_background(cfg.background), cfg.quad_order);
}

}  // namespace magspec
