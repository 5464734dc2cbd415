#include "magspec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <thread>

#include <Eigen/SparseLU>

#include "magspec/eigenperturb.hpp"
#include "magspec/error.hpp"
#include "magspec/gcmpt.hpp"
#include "magspec/spectral.hpp"
#include "magspec/topology.hpp"

extern "C" void openblas_set_num_threads(int num_threads);

namespace magspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Json model_info(const ExperimentConfig& cfg, const Grid& grid, double b0) {
  Json m{{"n1", grid.n1()},
         {"n2", grid.n2()},
         {"h", grid.h()},
         {"geometry", to_string(grid.geometry())},
         {"b0", b0},
         {"field", build_profile(cfg.field).describe()},
         {"background", build_background(cfg.background).label}};
  if (cfg.flux_quanta && grid.spec().n1 == cfg.grid.n1 && grid.spec().n2 == cfg.grid.n2) m["flux_quanta"] = *cfg.flux_quanta;
  return m;
}

template <class T>
const T& need(const std::optional<T>& section, const char* name) {
  if (!section) throw ConfigError(std::string("config has no '") + name + "' section for this subcommand");
  return *section;
}

Json sweep_json(const SweepResult& s) { return to_json(s); }

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct Cluster {
  double lo, hi, mean;
  int count;
  bool complete;
};

std::vector<Cluster> clusters(const EigenDecomposition& eig, double gap) {
  std::vector<Cluster> out;
  const int n = eig.count();
  int start = 0;
  for (int k = 1; k <= n; ++k) {
    if (k < n && eig.values(k) - eig.values(k - 1) <= gap) continue;
    Cluster c{eig.values(start), eig.values(k - 1), 0.0, k - start, true};
    for (int j = start; j < k; ++j) c.mean += eig.values(j);
    c.mean /= c.count;
    if (k == n) c.complete = eig.complete || eig.coverage - c.hi > gap;
    out.push_back(c);
    start = k;
  }
  return out;
}

PlotSpec decay_plot(const DecayFit& fit, const std::string& title) {
  PlotSpec p;
  p.title = title;
  p.x_label = "distance";
  p.y_label = "max |K|";
  p.log_y = true;
  p.series.push_back({"binned maximum", fit.distances, fit.magnitudes});
  // ln|K| = ln C - α d
  p.fit = LinearFit{-fit.rate, std::log(std::max(fit.amplitude, 1e-300)), fit.r2, fit.bins};
  return p;
}

double default_window(const Grid& grid) { return 0.25 * std::min(grid.length1(), grid.length2()); }

GridSpec resized(const GridSpec& spec, int n) {
  GridSpec g = spec;
  g.n1 = g.n2 = n;
  return g;
}

}  // namespace

std::string Artifacts::path(const std::string& name) {
  const std::string p = (std::filesystem::path(dir_) / name).string();
  written_.push_back(name);
  return p;
}

void Artifacts::csv(const std::string& name, const Table& table) {
  if (dir_.empty()) return;
  emit_csv(path(name), table);
}

void Artifacts::svg(const std::string& name, const PlotSpec& plot) {
  if (dir_.empty()) return;
  emit_svg(path(name), plot);
}

void Artifacts::json(const std::string& name, const Json& report) {
  if (dir_.empty()) return;
  emit_json(path(name), report);
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"spectrum",   "projection", "gcmpt",       "chern",    "ids-sweep",
                                                 "gap-sweep",  "continuity", "eig-perturb", "decay-fit"};
  return names;
}

Json run_experiment(const std::string& subcommand, const ExperimentConfig& cfg, Artifacts& out) {
  if (subcommand == "spectrum") return run_spectrum(cfg, out);
  if (subcommand == "projection") return run_projection(cfg, out);
  if (subcommand == "gcmpt") return run_gcmpt(cfg, out);
  if (subcommand == "chern") return run_chern(cfg, out);
  if (subcommand == "ids-sweep") return run_ids_sweep(cfg, out);
  if (subcommand == "gap-sweep") return run_gap_sweep(cfg, out);
  if (subcommand == "continuity") return run_continuity(cfg, out);
  if (subcommand == "eig-perturb") return run_eig_perturb(cfg, out);
  if (subcommand == "decay-fit") return run_decay_fit(cfg, out);
  throw ConfigError("unknown subcommand '" + subcommand + "'");
}

Json run_spectrum(const ExperimentConfig& cfg, Artifacts& out) {
  const SpectrumSection sec = cfg.spectrum.value_or(SpectrumSection{});
  const ModelPtr model = build_model(cfg);
  const DiscreteHamiltonian h = assemble(model, cfg.b0);
  const EigenDecomposition eig = sec.count > 0 ? eigensolve_lowest(h, sec.count) : eigensolve(h);

  Table t{{"index", "eigenvalue"}, {}};
  for (int k = 0; k < eig.count(); ++k) t.add({static_cast<double>(k), eig.values(k)});
  out.csv("spectrum.csv", t);

  Json r{{"model", model_info(cfg, model->grid, cfg.b0)},
         {"eigenvalues", as_vector(eig.values)},
         {"count", eig.count()},
         {"max_residual", eig.max_residual},
         {"hermiticity_defect", h.hermiticity_defect()}};
  if (sec.cluster_gap > 0) {
    Json cs = Json::array();
    for (const Cluster& c : clusters(eig, sec.cluster_gap))
      cs.push_back({{"lo", c.lo}, {"hi", c.hi}, {"mean", c.mean}, {"count", c.count}, {"complete", c.complete}});
    r["clusters"] = cs;
  }
  return r;
}

Json run_projection(const ExperimentConfig& cfg, Artifacts& out) {
  const ProjectionSection& sec = need(cfg.projection, "projection");
  const ModelPtr model = build_model(cfg);
  const Grid& grid = model->grid;
  const DiscreteHamiltonian h = assemble(model, cfg.b0);
  const EigenDecomposition eig = eigensolve_below(h, sec.island.hi);
  const SpectralIsland island = spectral_island(eig, sec.island.lo, sec.island.hi);
  if (island.empty()) throw PreconditionError("empty_island", "no spectrum inside the island interval");
  const Projection p = spectral_projection(eig, sec.island.lo, sec.island.hi, grid.cell_area());
  const auto cert = p.certify();
  const double window = sec.window > 0 ? sec.window : default_window(grid);
  const BulkWindow win = bulk_window(grid, window);
  const DecayFit decay = fit_exponential_decay(p.kernel(), grid, win);
  const IdsReport density = ids(p, grid, {window});

  out.csv("decay.csv", decay_table(decay));
  out.svg("decay.svg", decay_plot(decay, "projection kernel decay"));

  Json r{{"model", model_info(cfg, grid, cfg.b0)},
         {"island", {{"a1", island.a1}, {"a2", island.a2}, {"s_minus", island.s_minus}, {"s_plus", island.s_plus},
                     {"gap_below", island.gap_below}, {"gap_above", island.gap_above}, {"count", island.count()}}},
         {"rank", p.rank()},
         {"orthonormality_defect", cert.idempotency},
         {"decay", to_json(decay)},
         {"window_density", density.plateau}};

  if (sec.landau_check) {
    const FieldProfile profile = build_profile(cfg.field);
    if (!profile.is_constant() || model->background.has_scalar() || model->background.has_vector())
      throw ConfigError("projection.landau_check needs a constant field without background");
    const double b = cfg.b0 * profile.amplitude();
    const double reach = sec.landau_reach / std::sqrt(b);
    const DenseMatrix v = p.basis();
    double worst_modulus = 0.0, worst_phase = 0.0;
    int pairs = 0;
    for (int i : win.sites)
      for (int j : win.sites) {
        const double d = site_distance(grid, i, j);
        if (d > reach) continue;
        const cplx k = (v.row(i) * v.row(j).adjoint())(0, 0) / grid.cell_area();
        const double modulus = b / (2.0 * M_PI) * std::exp(-b * d * d / 4.0);
        const double phase = b * peierls_phase(FieldProfile::constant(), grid.coordinate(i), grid.coordinate(j));
        worst_modulus = std::max(worst_modulus, std::abs(std::abs(k) - modulus) / modulus);
        worst_phase = std::max(worst_phase, std::abs(std::arg(k * std::polar(1.0, -phase))));
        ++pairs;
      }
    r["landau_kernel"] = {{"field", b},
                          {"flux_per_plaquette", b * grid.cell_area()},
                          {"reach", reach},
                          {"pairs", pairs},
                          {"max_modulus_error", worst_modulus},
                          {"max_phase_error", worst_phase}};
  }
  return r;
}

Json run_gcmpt(const ExperimentConfig& cfg, Artifacts& out) {
  const GcmptSection& sec = need(cfg.gcmpt, "gcmpt");
  const ModelPtr model = build_model(cfg);
  const Grid& grid = model->grid;
  const double area = grid.cell_area();
  Json r{{"model", model_info(cfg, grid, cfg.b0)}};

  if (sec.chain) {
    const ChainSection& c = *sec.chain;
    const DiscreteHamiltonian h0 = assemble(model, cfg.b0);
    const EigenDecomposition eig0 = eigensolve(h0);
    const Projection p0 = spectral_projection(eig0, -kInf, c.fermi_energy, area);
    if (p0.rank() == 0) throw PreconditionError("empty_projection", "no spectrum below the Fermi energy");
    if (p0.rank() == eig0.count()) throw PreconditionError("full_projection", "the Fermi energy is above the spectrum");
    const int top = p0.rank() - 1;
    const double gap_above = eig0.values(top + 1) - eig0.values(top);
    const Contour contour = island_contour(eig0.values(0), eig0.values(top), kInf, gap_above, 0.1, c.nodes);

    SweepResult t_sup, r_diff, pb_pt, delta, nen_pt;
    t_sup.x_label = r_diff.x_label = pb_pt.x_label = delta.x_label = nen_pt.x_label = "epsilon";
    t_sup.y_label = "sup_z ||T||";
    r_diff.y_label = "sup_z ||R - S||";
    pb_pt.y_label = "||P_b - P~||";
    delta.y_label = "||Delta||";
    nen_pt.y_label = "||P_N - P~||";
    Table t{{"epsilon", "t_norm", "resolvent_minus_s", "pb_minus_ptilde", "delta_norm", "nenciu_minus_ptilde",
             "idempotency", "self_adjointness", "kn_unitarity", "kn_intertwining", "rank_b"},
            {}};
    double worst_idem = 0, worst_sa = 0, worst_unit = 0, worst_inter = 0;
    double largest = 0.0;
    KernelOperator u_largest;
    bool ranks_match = true;
    for (double eps : c.epsilons) {
      const DiscreteHamiltonian hb = assemble(model, cfg.b0 + eps);
      const EigenDecomposition eigb = eigensolve(hb);
      double tn = 0, rd = 0;
      for (int q = 0; q < contour.nodes; ++q) {
        const cplx z = contour.node(q);
        const KernelOperator s = quasi_inverse_S(eig0, *model, z, eps);
        tn = std::max(tn, operator_norm(defect_T(hb, s, z).op));
        rd = std::max(rd, operator_norm(DenseMatrix(resolvent(eigb, z, area).op - s.op)));
      }
      const KernelOperator pt = tilde_projection(p0, grid, model->profile, eps, model->quad_order);
      const Projection pb = spectral_projection(eigb, -kInf, c.fermi_energy, area);
      const NenciuResult nen = nenciu_projection(pt);
      const double d1 = operator_norm(DenseMatrix(pb.dense() - pt.op));
      const double d3 = operator_norm(DenseMatrix(nen.projection.dense() - pt.op));
      const KatoNagyResult kn = kato_nagy(pb, nen.projection);
      ranks_match = ranks_match && pb.rank() == nen.projection.rank();
      const double a = std::abs(eps);
      t_sup.add(a, tn);
      r_diff.add(a, rd);
      pb_pt.add(a, d1);
      delta.add(a, nen.delta_norm);
      nen_pt.add(a, d3);
      worst_idem = std::max(worst_idem, nen.idempotency);
      worst_sa = std::max(worst_sa, nen.self_adjointness);
      worst_unit = std::max(worst_unit, kn.unitarity_defect);
      worst_inter = std::max(worst_inter, kn.intertwining_defect);
      t.add({eps, tn, rd, d1, nen.delta_norm, d3, nen.idempotency, nen.self_adjointness, kn.unitarity_defect,
             kn.intertwining_defect, static_cast<double>(pb.rank())});
      if (a > largest) {
        largest = a;
        u_largest = kn.unitary;
      }
    }
    for (SweepResult* s : {&t_sup, &r_diff, &pb_pt, &delta, &nen_pt}) s->refit();

    DenseMatrix shifted = u_largest.op;
    shifted.diagonal().array() -= 1.0;
    const double window = c.decay_window > 0 ? c.decay_window : 0.45 * std::min(grid.length1(), grid.length2());
    DecayFitOptions opts;
    opts.from_peak = true;
    const DecayFit u_decay = fit_exponential_decay({shifted, area}, grid, bulk_window(grid, window), opts);

    out.csv("chain.csv", t);
    out.csv("t_norm.csv", series_table(t_sup));
    out.svg("t_norm.svg", sweep_plot(t_sup, "defect of the quasi-inverse"));
    out.svg("projection_chain.svg", [&] {
      PlotSpec p = sweep_plot(pb_pt, "approximate projection chain");
      p.y_label = "norm";
      p.series.push_back({delta.y_label, delta.x, delta.y});
      p.series.push_back({nen_pt.y_label, nen_pt.x, nen_pt.y});
      return p;
    }());
    out.csv("kato_nagy_decay.csv", decay_table(u_decay));

    r["chain"] = {{"rank", p0.rank()},
                  {"fermi_energy", c.fermi_energy},
                  {"contour", {{"center", contour.center}, {"radius", contour.radius}, {"nodes", contour.nodes}}},
                  {"t_norm", sweep_json(t_sup)},
                  {"resolvent_minus_s", sweep_json(r_diff)},
                  {"pb_minus_ptilde", sweep_json(pb_pt)},
                  {"delta_norm", sweep_json(delta)},
                  {"nenciu_minus_ptilde", sweep_json(nen_pt)},
                  {"max_idempotency", worst_idem},
                  {"max_self_adjointness", worst_sa},
                  {"max_kn_unitarity", worst_unit},
                  {"max_kn_intertwining", worst_inter},
                  {"ranks_match", ranks_match},
                  {"kn_decay_epsilon", largest},
                  {"kn_decay", to_json(u_decay)}};
  }

  if (sec.trace) {
    const TraceSection& tr = *sec.trace;
    const FermiProjection f0 = fermi_projection(model, cfg.b0, tr.fermi_energy);
    const FermiProjection f1 = fermi_projection(model, cfg.b0 + tr.epsilon, tr.fermi_energy);
    const KernelOperator pt = tilde_projection(f0.projection, grid, model->profile, tr.epsilon, model->quad_order);
    const NenciuResult nen = nenciu_projection_spectral(pt);
    SweepResult diff = local_trace_difference(f1.projection, nen.projection, grid, tr.windows);
    diff.x_label = "L";
    diff.y_label = "|Tr chi_L (P_b - P_N)|";
    out.csv("trace_difference.csv", series_table(diff));
    out.svg("trace_difference.svg", sweep_plot(diff, "local trace difference"));
    r["trace"] = {{"epsilon", tr.epsilon},
                  {"fermi_energy", tr.fermi_energy},
                  {"rank_b0", f0.rank},
                  {"rank_b", f1.rank},
                  {"nenciu_rank", nen.projection.rank()},
                  {"delta_norm", nen.delta_norm},
                  {"distance", projection_distance(f1.projection, nen.projection)},
                  {"difference", sweep_json(diff)}};
  }
  return r;
}

Json run_chern(const ExperimentConfig& cfg, Artifacts& out) {
  const ChernSection& sec = need(cfg.chern, "chern");
  Json r = Json::object();
  std::vector<double> estimates;

  if (sec.fermi_energy) {
    const ModelPtr model = build_model(cfg);
    const Grid& grid = model->grid;
    const FermiProjection f = fermi_projection(model, cfg.b0, *sec.fermi_energy);
    const ChernReport c = chern_marker(f.projection, grid, sec.windows);
    Table t{{"x", "value"}, {}};
    for (std::size_t i = 0; i < c.values.size(); ++i) t.add({c.half_widths[i], c.values[i]});
    out.csv("marker.csv", t);

    // Projection onto a sparse set of sites: every commutator with position vanishes.
    std::vector<int> sites;
    for (int i = 0; i < grid.size(); ++i) {
      const auto s = grid.site(i);
      if (s[0] % 5 == 0 && s[1] % 3 == 0) sites.push_back(i);
    }
    DenseMatrix basis = DenseMatrix::Zero(grid.size(), static_cast<Eigen::Index>(sites.size()));
    for (std::size_t k = 0; k < sites.size(); ++k) basis(sites[k], static_cast<Eigen::Index>(k)) = 1.0;
    const ChernReport diag = chern_marker(Projection::from_basis(std::move(basis), grid.cell_area()), grid, sec.windows);
    double diag_max = 0.0;
    for (double v : diag.values) diag_max = std::max(diag_max, std::abs(v));

    r["model"] = model_info(cfg, grid, cfg.b0);
    r["marker"] = {{"fermi_energy", f.fermi_energy},
                   {"rank", f.rank},
                   {"gap_above", f.gap_above},
                   {"half_widths", c.half_widths},
                   {"values", c.values},
                   {"extrapolated", c.extrapolated},
                   {"nearest_integer", c.nearest_integer},
                   {"deviation", c.deviation},
                   {"max_imaginary", c.max_imaginary},
                   {"position_diagonal_max", diag_max}};
    estimates.push_back(c.extrapolated);
  }

  if (sec.oracle) {
    const OracleSpec& o = *sec.oracle;
    const GridSpec g{o.n, o.n, cfg.grid.h, Geometry::torus};
    const ModelPtr torus = build_model(cfg, g);
    const double b = admissible_field(torus->grid, torus->profile, o.flux_quanta);
    const int bands = o.band_count > 0 ? o.band_count : o.flux_quanta;
    const FhsReport f = fhs_chern_oracle(torus, b, bands, o.mesh);
    r["fhs"] = {{"n", o.n}, {"flux_quanta", o.flux_quanta}, {"field", b},      {"band_count", bands},
                {"mesh", o.mesh}, {"chern", f.chern},     {"raw", f.raw}, {"min_gap", f.min_gap}};
    estimates.push_back(f.raw);
  }

  if (sec.ids) {
    ExperimentConfig sub = cfg;
    sub.ids_sweep = sec.ids;
    Artifacts none;
    const Json ids = run_ids_sweep(sub, none);
    r["ids"] = ids;
    estimates.push_back(ids.at("c1").get<double>());
  }

  if (estimates.empty()) throw ConfigError("chern needs a marker, oracle or ids entry");
  const double target = std::round(estimates.front());
  double spread = 0.0;
  for (double e : estimates) spread = std::max(spread, std::abs(e - target));
  r["agreement"] = {{"integer", static_cast<int>(target)}, {"max_deviation", spread}, {"estimates", estimates}};
  return r;
}

Json run_ids_sweep(const ExperimentConfig& cfg, Artifacts& out) {
  const TorusSweepSpec& sec = need(cfg.ids_sweep, "ids_sweep");
  const GridSpec g = sec.n > 0 ? GridSpec{sec.n, sec.n, cfg.grid.h, Geometry::torus} : cfg.grid;
  const ModelPtr model = build_model(cfg, g);
  std::vector<double> fields;
  for (int p : sec.flux_quanta) fields.push_back(admissible_field(model->grid, model->profile, p));
  const auto [bmin, bmax] = std::minmax_element(fields.begin(), fields.end());
  const double a1 = sec.gap.lo * *bmax, a2 = sec.gap.hi * *bmin;
  if (!(a1 < a2)) throw ConfigError("ids_sweep: gap interval is empty over the requested fields");
  const IdsSweepReport rep = ids_sweep(model, fields, a1, a2);

  // State count against flux quanta and density against b/2π, per kept field.
  double exactness = 0.0;
  bool counts_match = true;
  std::vector<int> kept_quanta;
  for (std::size_t i = 0; i < rep.fields.size(); ++i) {
    exactness = std::max(exactness, std::abs(rep.densities[i] - rep.fields[i] / (2.0 * M_PI)));
    const auto it = std::find(fields.begin(), fields.end(), rep.fields[i]);
    const int p = sec.flux_quanta[static_cast<std::size_t>(it - fields.begin())];
    kept_quanta.push_back(p);
    counts_match = counts_match && rep.ranks[i] == p;
  }

  Table t{{"x", "value"}, {}};
  std::vector<double> xs;
  for (std::size_t i = 0; i < rep.fields.size(); ++i) {
    xs.push_back(rep.fields[i] / (2.0 * M_PI));
    t.add({rep.fields[i], rep.densities[i]});
  }
  out.csv("ids.csv", t);
  PlotSpec plot;
  plot.title = "integrated density of states";
  plot.x_label = "b / 2pi";
  plot.y_label = "IDS";
  plot.series.push_back({"IDS", xs, rep.densities});
  plot.fit = LinearFit{rep.slope, rep.intercept, 1.0, static_cast<int>(xs.size())};
  out.svg("ids.svg", plot);

  return {{"model", model_info(cfg, model->grid, fields.back())},
          {"gap", {a1, a2}},
          {"fields", rep.fields},
          {"flux_quanta", kept_quanta},
          {"densities", rep.densities},
          {"ranks", rep.ranks},
          {"c0", rep.intercept},
          {"c1", rep.slope},
          {"c1_integer", rep.slope_integer},
          {"fit_residual", rep.residual},
          {"dropped", rep.dropped},
          {"max_density_error", exactness},
          {"counts_match_flux", counts_match}};
}

Json run_gap_sweep(const ExperimentConfig& cfg, Artifacts& out) {
  const GapSweepSection& sec = need(cfg.gap_sweep, "gap_sweep");
  const ModelPtr model = build_model(cfg);
  Json gaps = Json::array();
  bool all_open = true;
  double min_margin = kInf;
  for (double eps : sec.epsilons) {
    const GapReport g = gap_persistence(model, cfg.b0, eps, sec.gap.lo, sec.gap.hi);
    all_open = all_open && g.open;
    min_margin = std::min(min_margin, g.margin);
    gaps.push_back({{"epsilon", eps}, {"open", g.open}, {"margin", g.margin}, {"nearest", g.nearest_eigenvalue}});
  }
  const EdgeSweep e = edge_sweep(model, cfg.b0, sec.epsilons, sec.island.lo, sec.island.hi);

  Table t{{"epsilon", "s_minus", "s_plus"}, {}};
  for (std::size_t i = 0; i < e.epsilon.size(); ++i) t.add({e.epsilon[i], e.s_minus[i], e.s_plus[i]});
  out.csv("edges.csv", t);
  PlotSpec plot;
  plot.title = "island edges";
  plot.x_label = "epsilon";
  plot.y_label = "energy";
  plot.series.push_back({"s-", e.epsilon, e.s_minus});
  plot.series.push_back({"s+", e.epsilon, e.s_plus});
  out.svg("edges.svg", plot);

  return {{"model", model_info(cfg, model->grid, cfg.b0)},
          {"gap", {sec.gap.lo, sec.gap.hi}},
          {"island", {sec.island.lo, sec.island.hi}},
          {"persistence", gaps},
          {"all_open", all_open},
          {"min_margin", min_margin},
          {"edges", {{"epsilon", e.epsilon}, {"s_minus", e.s_minus}, {"s_plus", e.s_plus}}},
          {"lipschitz", e.lipschitz},
          {"fitted_slope", e.fitted_slope},
          {"r2", e.r2}};
}

Json run_continuity(const ExperimentConfig& cfg, Artifacts& out) {
  const ContinuitySection& sec = need(cfg.continuity, "continuity");
  Json r = Json::object();
  if (sec.strong) {
    const StrongSpec& s = *sec.strong;
    const ModelPtr model = s.box > 0 ? build_model(cfg, resized(cfg.grid, s.box)) : build_model(cfg);
    SweepResult probe =
        strong_continuity_probe(model, cfg.b0, s.epsilons, central_patch(model->grid), s.fermi_energy);
    probe.x_label = "epsilon";
    probe.y_label = "||(P_b - P_b0) eta||";
    out.csv("strong.csv", series_table(probe));
    out.svg("strong.svg", sweep_plot(probe, "strong continuity probe"));
    r["strong"] = {{"model", model_info(cfg, model->grid, cfg.b0)}, {"probe", sweep_json(probe)}};
  }
  if (sec.trend) {
    const TrendSpec& t = *sec.trend;
    std::vector<ModelPtr> models;
    for (int box : t.boxes) models.push_back(build_model(cfg, resized(cfg.grid, box)));
    const DistanceTrend d = projection_distance_trend(models, cfg.b0, t.epsilon, t.fermi_energy);
    bool increasing = true;
    for (std::size_t i = 1; i < d.distances.size(); ++i) increasing = increasing && d.distances[i] > d.distances[i - 1];
    Table tab{{"x", "value"}, {}};
    for (std::size_t i = 0; i < d.box_sizes.size(); ++i) tab.add({static_cast<double>(d.box_sizes[i]), d.distances[i]});
    out.csv("norm_trend.csv", tab);
    r["trend"] = {{"epsilon", t.epsilon},        {"fermi_energy", t.fermi_energy}, {"boxes", d.box_sizes},
                  {"distances", d.distances},    {"ranks", d.ranks},               {"fermi_ranks_b", d.fermi_ranks_b},
                  {"rank_gaps", d.rank_gaps},    {"increasing", increasing},
                  {"final", d.distances.empty() ? 0.0 : d.distances.back()}};
  }
  if (sec.derivative) {
    const DerivativeSpec& ds = *sec.derivative;
    const ModelPtr model = build_model(cfg);
    const DerivativeProbe p = norm_derivative_probe(model, cfg.b0, ds.epsilons, ds.island.lo, ds.island.hi);
    out.csv("norm_distance.csv", series_table(p.distance));
    out.csv("derivative_remainder.csv", series_table(p.remainder));
    PlotSpec plot = sweep_plot(p.distance, "norm continuity and differentiability");
    plot.y_label = "norm";
    plot.series.push_back({p.remainder.y_label, p.remainder.x, p.remainder.y});
    plot.series.push_back({p.asymmetry.y_label, p.asymmetry.x, p.asymmetry.y});
    out.svg("derivative.svg", plot);
    r["derivative"] = {{"model", model_info(cfg, model->grid, cfg.b0)},
                       {"distance", sweep_json(p.distance)},
                       {"remainder", sweep_json(p.remainder)},
                       {"asymmetry", sweep_json(p.asymmetry)}};
  }
  if (r.empty()) throw ConfigError("continuity needs a strong, trend or derivative entry");
  return r;
}

Json run_eig_perturb(const ExperimentConfig& cfg, Artifacts& out) {
  const EigPerturbSection& sec = need(cfg.eig_perturb, "eig_perturb");
  const ModelPtr model = build_model(cfg);
  const ExpansionSweep sweep = expansion_order_sweep(model, cfg.b0, sec.epsilons, sec.index);

  const DiscreteHamiltonian hb0 = assemble(model, cfg.b0);
  const EigenstateData base = isolated_eigenstate(hb0, sec.index);
  Json feshbach = Json::array();
  double worst = 0.0;
  int max_iter = 0;
  for (const ExpansionRow& row : sweep.rows) {
    const FeshbachResult f = feshbach_iterate(assemble(model, cfg.b0 + row.epsilon), hb0, base);
    const double diff = std::abs(f.energy - row.exact);
    worst = std::max(worst, diff);
    max_iter = std::max(max_iter, f.iterations);
    feshbach.push_back({{"epsilon", row.epsilon},
                        {"energy", f.energy},
                        {"iterations", f.iterations},
                        {"difference", diff},
                        {"min_denominator", f.min_denominator}});
  }

  Table t{{"epsilon", "e_exact", "e_first", "e_second", "residual"}, {}};
  for (const ExpansionRow& row : sweep.rows) t.add({row.epsilon, row.exact, row.first, row.second, row.residual});
  out.csv("eig_perturb.csv", t);
  PlotSpec plot = sweep_plot(sweep.second_order, "eigenvalue expansion errors");
  plot.y_label = "error";
  plot.series.push_back({sweep.first_order.y_label, sweep.first_order.x, sweep.first_order.y});
  out.svg("eig_perturb.svg", plot);

  return {{"model", model_info(cfg, model->grid, cfg.b0)},
          {"index", sec.index},
          {"e0", base.energy},
          {"gap", base.gap},
          {"multiplicity", base.multiplicity},
          {"state_decay", to_json(base.decay)},
          {"second_order", sweep_json(sweep.second_order)},
          {"first_order", sweep_json(sweep.first_order)},
          {"eigenvalue_shift", sweep_json(sweep.eigenvalue_shift)},
          {"projected_energy", sweep_json(sweep.projected_energy)},
          {"kato_nagy_decay", to_json(sweep.kato_nagy_decay)},
          {"kato_nagy_unitarity", sweep.kato_nagy_unitarity},
          {"kato_nagy_intertwining", sweep.kato_nagy_intertwining},
          {"feshbach", feshbach},
          {"feshbach_max_difference", worst},
          {"feshbach_max_iterations", max_iter}};
}

Json run_decay_fit(const ExperimentConfig& cfg, Artifacts& out) {
  const DecayFitSection& sec = need(cfg.decay_fit, "decay_fit");
  const ModelPtr model = build_model(cfg);
  const Grid& grid = model->grid;
  const DiscreteHamiltonian h = assemble(model, cfg.b0);
  const double window = sec.window > 0 ? sec.window : default_window(grid);
  const BulkWindow win = bulk_window(grid, window);
  DecayFitOptions opts;
  opts.from_peak = sec.from_peak;
  DecayFit fit;
  Json what;
  if (sec.kernel == "resolvent") {
    // Only the window columns are needed: one sparse solve per window site.
    const cplx z(sec.z_re, sec.z_im);
    SparseMatrix shifted = h.matrix();
    SparseMatrix identity(h.dim(), h.dim());
    identity.setIdentity();
    shifted -= z * identity;
    Eigen::SparseLU<SparseMatrix> lu(shifted);
    if (lu.info() != Eigen::Success) throw PreconditionError("z_in_spectrum", "H - z is singular");
    std::vector<double> distance, magnitude;
    Vector rhs = Vector::Zero(h.dim());
    for (int j : win.sites) {
      rhs(j) = 1.0;
      const Vector col = lu.solve(rhs);
      rhs(j) = 0.0;
      for (int i : win.sites) {
        distance.push_back(site_distance(grid, i, j));
        magnitude.push_back(std::abs(col(i)) / grid.cell_area());
      }
    }
    fit = fit_decay_samples(distance, magnitude, grid.h(), 2.0 * grid.h(), window, opts.relative_floor, opts.from_peak);
    const EigenDecomposition near = eigensolve_below(h, sec.z_re);
    double dist = std::abs(near.coverage - z);
    for (int i = 0; i < near.count(); ++i) dist = std::min(dist, std::abs(near.values(i) - z));
    what = {{"kernel", "resolvent"}, {"z", {sec.z_re, sec.z_im}}, {"distance_to_spectrum", dist}};
  } else {
    const EigenDecomposition eig = eigensolve_below(h, sec.island.hi);
    const SpectralIsland island = spectral_island(eig, sec.island.lo, sec.island.hi);
    if (island.empty()) throw PreconditionError("empty_island", "no spectrum inside the island interval");
    fit = fit_exponential_decay(spectral_projection(eig, sec.island.lo, sec.island.hi, grid.cell_area()).kernel(),
                                grid, win, opts);
    what = {{"kernel", "projection"},
            {"island", {sec.island.lo, sec.island.hi}},
            {"rank", island.count()},
            {"gap", std::min(island.gap_below, island.gap_above)}};
  }
  out.csv("decay.csv", decay_table(fit));
  out.svg("decay.svg", decay_plot(fit, sec.kernel + " kernel decay"));
  what["model"] = model_info(cfg, grid, cfg.b0);
  what["window"] = window;
  what["decay"] = to_json(fit);
  return what;
}

void set_workers(int workers) {
  if (workers < 1) throw ConfigError("--workers must be at least 1");
  openblas_set_num_threads(workers);
}

int default_workers() {
  if (const char* env = std::getenv("MAGSPEC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("MAGSPEC_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace magspec
