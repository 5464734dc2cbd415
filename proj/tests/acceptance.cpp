// Acceptance report: one PASS/FAIL line per criterion on the shipped presets.
// Exit status is 0 when every criterion was evaluated; the lines carry the verdicts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include "magspec/config.hpp"
#include "magspec/experiments.hpp"
#include "magspec/gcmpt.hpp"
#include "support.hpp"

using namespace magspec;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

// Runner results are shared between criteria, so each preset/subcommand runs once.
std::map<std::string, Json> cache;

const Json& report(const std::string& preset, const std::string& sub) {
  const std::string key = preset + "/" + sub;
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Artifacts none;
  return cache[key] = run_experiment(sub, load_preset(preset), none);
}

Verdict landau_spectrum() {
  const ExperimentConfig cfg = load_preset("landau-small");
  const Json& r = report("landau-small", "spectrum");
  const Json& c = r.at("clusters");
  const double b = cfg.b0;
  const double e1 = c.at(0).at("mean"), e2 = c.at(1).at("mean");
  const int count = c.at(0).at("count");
  const double d1 = std::abs(e1 / b - 1), d2 = std::abs(e2 / (3 * b) - 1);
  return {d1 <= 0.02 && d2 <= 0.02 && count == *cfg.flux_quanta && c.at(0).at("complete").get<bool>(),
          fmt("E1/b-1=%.2e E2/3b-1=%.2e", d1, d2) + " states=" + std::to_string(count) + " p=" +
              std::to_string(*cfg.flux_quanta)};
}

Verdict peierls_algebra() {
  testing::Gen gen(2024);
  const FieldProfile f = testing::cos_cos_profile(0.3);
  double antisym = 0, comp = 0, closed = 0;
  for (int k = 0; k < 100; ++k) {
    const Point x = gen.point(6), y = gen.point(6), z = gen.point(6);
    antisym = std::max(antisym, std::abs(peierls_phase(f, x, y, 32) + peierls_phase(f, y, x, 32)));
    comp = std::max(comp, composition_defect(f, x, y, z, 32));
    const double c = gen.uniform(0.1, 2.0);
    const FieldProfile cf = FieldProfile::constant(c);
    closed = std::max(closed, std::abs(peierls_phase(cf, x, y) + 0.5 * c * wedge(x, y)));
    closed = std::max(closed, std::abs(triangle_flux(cf, x, y, z) + 0.5 * c * wedge(y - x, z - x)));
  }
  return {antisym <= 1e-12 && comp <= 1e-8 && closed <= 1e-12,
          fmt("antisymmetry=%.1e composition=%.1e closed_form=%.1e", antisym, comp, closed)};
}

Verdict quasi_inverse() {
  const Json& c = report("confining-well", "gcmpt").at("chain");
  const double t = c.at("t_norm").at("slope"), rs = c.at("resolvent_minus_s").at("slope");
  const auto& x = c.at("t_norm").at("x");
  const double decades = std::log10(x.back().get<double>() / x.front().get<double>());
  return {within(t, 1, 0.15) && within(rs, 1, 0.15) && decades >= 1 - 1e-12 &&
              c.at("contour").at("nodes").get<int>() == 8,
          fmt("T slope=%.3f (R-S) slope=%.3f over %.2f decades", t, rs, decades)};
}

Verdict gap_stability() {
  const ExperimentConfig cfg = load_preset("hofstadter-periodic");
  const Json& r = report("hofstadter-periodic", "gap-sweep");
  double max_eps = 0;
  for (double e : r.at("edges").at("epsilon")) max_eps = std::max(max_eps, std::abs(e));
  const double lip = r.at("lipschitz"), r2 = r.at("r2");
  return {r.at("all_open").get<bool>() && std::isfinite(lip) && lip > 0 && r2 >= 0.9 && max_eps <= cfg.b0 / 10,
          fmt("gap open, max eps/b=%.3f c=%.3f R2=%.4f", max_eps / cfg.b0, lip, r2)};
}

Verdict projection_chain() {
  const Json& c = report("confining-well", "gcmpt").at("chain");
  const double s1 = c.at("pb_minus_ptilde").at("slope"), s2 = c.at("delta_norm").at("slope"),
               s3 = c.at("nenciu_minus_ptilde").at("slope");
  const double idem = c.at("max_idempotency"), adj = c.at("max_self_adjointness");
  const double uni = c.at("max_kn_unitarity"), inter = c.at("max_kn_intertwining");
  const double rate = c.at("kn_decay").at("rate"), r2 = c.at("kn_decay").at("r2");
  const bool ok = within(s1, 1, 0.15) && within(s2, 1, 0.15) && within(s3, 1, 0.15) && idem <= 1e-10 &&
                  adj <= 1e-10 && uni <= 1e-10 && inter <= 1e-10 && rate > 0 && r2 >= 0.9;
  return {ok, fmt("slopes %.3f/%.3f/%.3f", s1, s2, s3) + fmt(" residual max=%.1e", std::max({idem, adj, uni, inter})) +
                  fmt(" KN decay rate=%.3f R2=%.3f", rate, r2)};
}

Verdict chern_agreement() {
  const Json& r = report("landau-marker", "chern");
  const double marker = r.at("marker").at("extrapolated");
  const int fhs = r.at("fhs").at("chern");
  const double c1 = r.at("ids").at("c1");
  const double diag = r.at("marker").at("position_diagonal_max");
  return {within(marker, 1, 0.05) && fhs == 1 && within(c1, 1, 0.05) && diag == 0.0,
          fmt("marker=%.6f c1=%.6f position-diagonal=%.1e", marker, c1, diag) + " FHS=" + std::to_string(fhs)};
}

Verdict ids_exactness() {
  const Json& r = report("landau-small", "ids-sweep");
  const double err = r.at("max_density_error");
  return {err <= 1e-6 && r.at("counts_match_flux").get<bool>(),
          fmt("max |Tr P/area - b/2pi|=%.1e", err) + " counts match flux: " +
              (r.at("counts_match_flux").get<bool>() ? "yes" : "no")};
}

Verdict trace_difference() {
  const Json& d = report("landau-marker", "gcmpt").at("trace").at("difference");
  const double slope = d.at("slope");
  const double first = d.at("y").front(), last = d.at("y").back();
  return {slope <= 1.2, fmt("growth exponent=%.3f (|diff| %.1e at L=8, %.1e at L=32)", slope, first, last)};
}

Verdict continuity() {
  const Json& m = report("landau-marker", "continuity");
  const Json& w = report("confining-well", "continuity");
  const double strong = m.at("strong").at("probe").at("slope");
  const Json& trend = m.at("trend");
  const double final_distance = trend.at("final");
  const double dist = w.at("derivative").at("distance").at("slope");
  const double rem = w.at("derivative").at("remainder").at("slope");
  const bool ok = strong >= 0.85 && trend.at("increasing").get<bool>() && final_distance >= 0.9 &&
                  within(dist, 1, 0.15) && rem >= 1.7;
  return {ok, fmt("strong=%.3f trend final=%.3f norm slope=%.3f remainder slope=%.3f", strong, final_distance, dist,
                  rem)};
}

Verdict feshbach() {
  const Json& r = report("confining-well", "eig-perturb");
  const double s2 = r.at("second_order").at("slope"), s1 = r.at("first_order").at("slope");
  const double fd = r.at("feshbach_max_difference");
  const auto& x = r.at("second_order").at("x");
  const double lo = x.front(), hi = x.back();
  return {within(s2, 3, 0.3) && within(s1, 2, 0.3) && fd <= 1e-9 && lo <= 0.01 + 1e-12 && hi >= 0.3 - 1e-12,
          fmt("second-order slope=%.3f first-order slope=%.3f Feshbach diff=%.1e", s2, s1, fd)};
}

Verdict gauge_covariance() {
  testing::Gen gen(99);
  double spec = 0, kern = 0;
  const ModelPtr models[] = {
      make_model({16, 16, 1.0, Geometry::dirichlet}, FieldProfile::constant()),
      make_model({14, 14, 0.5, Geometry::dirichlet}, testing::cos_cos_profile(0.3), harmonic_well(1.0, 2.5))};
  for (const ModelPtr& m : models) {
    const double b = 0.4;
    const DiscreteHamiltonian h = assemble(m, b);
    const Eigen::VectorXd theta = gen.gauge(m->grid.size());
    const DiscreteHamiltonian hg = gauge_transform(h, theta);
    spec = std::max(spec, (eigensolve(h).values - eigensolve(hg).values).cwiseAbs().maxCoeff());
    const Vector u = (cplx(0, 1) * theta.cast<cplx>()).array().exp().matrix();
    for (double eps : {0.0, 0.05}) {
      const cplx z{0.3, 0.2};
      const DenseMatrix s = quasi_inverse_S(h, z, eps).op, sg = quasi_inverse_S(hg, z, eps).op;
      kern = std::max(kern, testing::max_abs(sg - u.asDiagonal() * s * u.conjugate().asDiagonal()));
    }
  }
  return {spec <= 1e-10 && kern <= 1e-10, fmt("spectra=%.1e dressed kernels=%.1e", spec, kern)};
}

Verdict landau_kernel() {
  const Json& k = report("landau-small", "projection").at("landau_kernel");
  const double mod = k.at("max_modulus_error"), ph = k.at("max_phase_error"), flux = k.at("flux_per_plaquette");
  return {mod <= 0.05 && ph <= 0.05 && flux <= 0.1,
          fmt("modulus=%.2e phase=%.2e rad flux/plaquette=%.4f", mod, ph, flux)};
}

}  // namespace

int main() {
  set_workers(default_workers());
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"Landau spectrum", landau_spectrum},
      {"Peierls phase algebra", peierls_algebra},
      {"quasi-inverse defect scaling", quasi_inverse},
      {"gap stability and Lipschitz edges", gap_stability},
      {"approximate projection chain", projection_chain},
      {"Chern triple agreement", chern_agreement},
      {"IDS exactness on torus", ids_exactness},
      {"local trace difference O(L)", trace_difference},
      {"strong vs norm continuity", continuity},
      {"Feshbach third order", feshbach},
      {"gauge covariance", gauge_covariance},
      {"Landau kernel plug-in", landau_kernel},
  };
  int passed = 0, n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    passed += v.pass;
    std::printf("%s %2d %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", passed, n);
  return 0;
}
