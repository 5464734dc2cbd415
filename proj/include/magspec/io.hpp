#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "magspec/kernel.hpp"
#include "magspec/sweep.hpp"

namespace magspec {

using Json = nlohmann::json;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) { rows.push_back(std::move(row)); }
  bool empty() const { return rows.empty(); }
};

// Sweep series as a two-column "x,value" table.
Table series_table(const SweepResult& s);
Table decay_table(const DecayFit& fit);

// Shortest decimal text that round-trips the double; "nan"/"inf" spelled out.
std::string format_number(double v);

// Writers refuse empty input and never leave a partial file behind: content is
// written to a sibling temporary and renamed into place.
void emit_csv(const std::string& path, const Table& table);
// Pretty-printed (two-space indent), keys sorted, trailing newline.
void emit_json(const std::string& path, const Json& report);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
  // Overlay y = exp(intercept) x^slope on log-log axes, y = intercept + slope x otherwise.
  std::optional<LinearFit> fit;
};

void emit_svg(const std::string& path, const PlotSpec& plot);
std::string render_svg(const PlotSpec& plot);

// Log-log plot of a sweep with its power-law fit and slope annotation.
PlotSpec sweep_plot(const SweepResult& s, const std::string& title);

Json to_json(const LinearFit& fit);
Json to_json(const DecayFit& fit);
Json to_json(const SweepResult& s);

}  // namespace magspec
