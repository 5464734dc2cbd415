#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "magspec/config.hpp"
#include "magspec/error.hpp"
#include "magspec/experiments.hpp"
#include "magspec/io.hpp"
#include "support.hpp"

using namespace magspec;
namespace fs = std::filesystem;

namespace {

SweepResult sample_sweep() {
  SweepResult s;
  s.x_label = "epsilon";
  s.y_label = "t_norm";
  for (double e : {0.01, 0.02, 0.05, 0.1}) s.add(e, 3.0 * e);
  s.refit();
  return s;
}

Json zero_field_config() {
  return Json::parse(R"({
    "grid": {"n1": 16, "n2": 16, "h": 1.0, "geometry": "torus"},
    "b0": 0.0,
    "spectrum": {"count": 0}
  })");
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("numbers round trip") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(NAN) == "nan");
  CHECK(format_number(INFINITY) == "inf");
}

TEST_CASE("csv has a header row") {
  const auto dir = testing::scratch_dir("csv");
  emit_csv((dir / "s.csv").string(), series_table(sample_sweep()));
  const std::string text = testing::slurp(dir / "s.csv");
  CHECK(text.rfind("x,value\n", 0) == 0);
  CHECK(text.find("0.01,0.03") != std::string::npos);
}

TEST_CASE("empty input leaves no file") {
  const auto dir = testing::scratch_dir("empty");
  CHECK_THROWS(emit_csv((dir / "e.csv").string(), Table{{"x"}, {}}));
  CHECK_THROWS(emit_svg((dir / "e.svg").string(), PlotSpec{}));
  CHECK(fs::is_empty(dir));
}

TEST_CASE("json is sorted and indented") {
  const auto dir = testing::scratch_dir("json");
  emit_json((dir / "r.json").string(), Json{{"zeta", 1}, {"alpha", {{"b", 2}, {"a", 1}}}});
  const std::string text = testing::slurp(dir / "r.json");
  CHECK(text == "{\n  \"alpha\": {\n    \"a\": 1,\n    \"b\": 2\n  },\n  \"zeta\": 1\n}\n");
}

TEST_CASE("svg is deterministic and self-contained") {
  const PlotSpec plot = sweep_plot(sample_sweep(), "defect");
  const std::string a = render_svg(plot), b = render_svg(plot);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("href") == std::string::npos);
  CHECK(a.find("slope = 1.000") != std::string::npos);
  CHECK(a.find("stroke-dasharray") != std::string::npos);

  const auto dir = testing::scratch_dir("svg");
  emit_svg((dir / "a.svg").string(), plot);
  emit_svg((dir / "b.svg").string(), plot);
  CHECK(testing::slurp(dir / "a.svg") == testing::slurp(dir / "b.svg"));
}

TEST_CASE("linear axes render without a fit") {
  PlotSpec p;
  p.series.push_back({"edge", {0, 1, 2}, {0.5, 0.4, 0.3}});
  const std::string s = render_svg(p);
  CHECK(s.find("slope") == std::string::npos);
  CHECK(s.find("polyline") != std::string::npos);
}

TEST_CASE("fits") {
  const LinearFit l = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(l.slope == doctest::Approx(2));
  CHECK(l.intercept == doctest::Approx(1));
  CHECK(l.r2 == doctest::Approx(1));
  const LinearFit p = fit_power_law({1, 2, 4, -1}, {3, 12, 48, 5});
  CHECK(p.points == 3);
  CHECK(p.slope == doctest::Approx(2));
}

TEST_CASE("decay fit of a pure exponential") {
  std::vector<double> d, m;
  for (int k = 0; k < 40; ++k) {
    d.push_back(0.5 * k);
    m.push_back(2.0 * std::exp(-0.7 * 0.5 * k));
  }
  const DecayFit f = fit_decay_samples(d, m, 0.5, 1.0, 15.0);
  CHECK(f.rate == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(f.r2 > 0.999);
}

}

TEST_SUITE("config") {

TEST_CASE("presets are shipped and parse") {
  const auto& names = preset_names();
  CHECK(names.size() == 4);
  for (const char* n : {"landau-small", "landau-marker", "hofstadter-periodic", "confining-well"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
    CHECK_NOTHROW(load_preset(n));
  }
  CHECK_THROWS_AS(load_preset("nope"), ConfigError);
}

TEST_CASE("landau-small scales to b0") {
  const ExperimentConfig c = load_preset("landau-small");
  CHECK(c.b0 == doctest::Approx(2 * M_PI * 16 / 4096.0));
  REQUIRE(c.projection);
  CHECK(c.projection->island.lo == doctest::Approx(0.5 * c.b0));
  CHECK(c.projection->island.hi == doctest::Approx(2.0 * c.b0));
}

TEST_CASE("unknown and missing keys are rejected") {
  Json doc = zero_field_config();
  doc["spectrum"]["cout"] = 3;
  try {
    parse_config(doc);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("spectrum.cout") != std::string::npos);
  }
  Json missing = zero_field_config();
  missing.erase("grid");
  CHECK_THROWS_AS(parse_config(missing), ConfigError);
  Json bad = zero_field_config();
  bad["grid"]["geometry"] = "sphere";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("unquantized torus flux is a precondition failure") {
  Json doc = zero_field_config();
  doc["b0"] = 0.1;
  CHECK_THROWS_AS(parse_config(doc), PreconditionError);
}

TEST_CASE("preset overrides merge") {
  const ExperimentConfig c = parse_config(Json::parse(R"({"preset": "confining-well", "seed": 9})"));
  CHECK(c.seed == 9);
  CHECK(c.preset == "confining-well");
  CHECK(c.background.well_omega == 1.0);
}

TEST_CASE("hash is stable and manifests round trip") {
  const ExperimentConfig a = parse_config(zero_field_config());
  const ExperimentConfig b = parse_config(zero_field_config());
  CHECK(config_hash(a.document) == config_hash(b.document));
  CHECK(config_hash(a.document).size() == 16);
  Json manifest{{"config", a.document}, {"config_hash", config_hash(a.document)}};
  const ExperimentConfig c = parse_config(manifest);
  CHECK(config_hash(c.document) == config_hash(a.document));

  Artifacts none;
  const Json r1 = run_experiment("spectrum", a, none), r2 = run_experiment("spectrum", c, none);
  CHECK(r1.dump() == r2.dump());
}

TEST_CASE("identical runs write identical artifacts") {
  const ExperimentConfig cfg = parse_config(zero_field_config());
  const auto d1 = testing::scratch_dir("run1"), d2 = testing::scratch_dir("run2");
  Artifacts a1(d1.string()), a2(d2.string());
  run_experiment("spectrum", cfg, a1);
  run_experiment("spectrum", cfg, a2);
  REQUIRE(!a1.written().empty());
  for (const std::string& name : a1.written())
    CHECK(testing::slurp(d1 / fs::path(name).filename()) == testing::slurp(d2 / fs::path(name).filename()));
  CHECK_THROWS_AS(run_experiment("bogus", cfg, a1), ConfigError);
}

}
