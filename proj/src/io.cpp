#include "magspec/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "magspec/error.hpp"

namespace magspec {

namespace {

void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  fs::rename(tmp, target);
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units
  double pixel_lo = 0.0, pixel_hi = 1.0;

  double transform(double v) const { return log ? std::log10(v) : v; }
  double pixel(double v) const { return pixel_lo + (transform(v) - lo) / (hi - lo) * (pixel_hi - pixel_lo); }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

Axis make_axis(std::vector<double> values, bool log, double pixel_lo, double pixel_hi) {
  Axis a;
  a.log = log;
  a.pixel_lo = pixel_lo;
  a.pixel_hi = pixel_hi;
  for (double& v : values) v = a.transform(v);
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (log) {
    lo = std::floor(lo + 1e-9);
    hi = std::ceil(hi - 1e-9);
    if (hi <= lo) hi = lo + 1.0;
  } else {
    if (hi <= lo) {
      const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> t;
  if (a.log) {
    for (double e = a.lo; e <= a.hi + 1e-9; e += 1.0) t.push_back(std::pow(10.0, e));
    return t;
  }
  const double span = a.hi - a.lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(a.lo / step) * step; v <= a.hi + 1e-12 * span; v += step) t.push_back(v);
  return t;
}

std::string tick_label(double v, bool log) {
  if (log) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(std::log10(v))));
    return buf;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-14 ? 0.0 : v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Table series_table(const SweepResult& s) {
  Table t{{"x", "value"}, {}};
  for (std::size_t i = 0; i < s.x.size(); ++i) t.add({s.x[i], s.y[i]});
  return t;
}

Table decay_table(const DecayFit& fit) {
  Table t{{"x", "value"}, {}};
  for (std::size_t i = 0; i < fit.distances.size(); ++i) t.add({fit.distances[i], fit.magnitudes[i]});
  return t;
}

void emit_csv(const std::string& path, const Table& table) {
  if (table.columns.empty() || table.empty()) throw ConfigError("emit_csv: refusing to write an empty table to " + path);
  std::ostringstream out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw ConfigError("emit_csv: ragged row in " + path);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
  write_atomically(path, out.str());
}

void emit_json(const std::string& path, const Json& report) {
  if (report.is_null() || (report.is_structured() && report.empty()))
    throw ConfigError("emit_json: refusing to write an empty report to " + path);
  write_atomically(path, report.dump(2) + "\n");
}

std::string render_svg(const PlotSpec& plot) {
  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw ConfigError("emit_svg: series '" + s.label + "' has mismatched lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], plot.log_x) && usable(s.y[i], plot.log_y)) {
        xs.push_back(s.x[i]);
        ys.push_back(s.y[i]);
      }
  }
  if (xs.empty()) throw ConfigError("emit_svg: no plottable points");

  const double width = 640, height = 440, left = 80, right = 24, top = 40, bottom = 64;
  const Axis ax = make_axis(xs, plot.log_x, left, width - right);
  const Axis ay = make_axis(ys, plot.log_y, height - bottom, top);

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
    << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0) << "\" fill=\"white\"/>\n";
  if (!plot.title.empty())
    o << "<text x=\"" << fixed(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(plot.title)
      << "</text>\n";
  o << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(width - left - right)
    << "\" height=\"" << fixed(height - top - bottom) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ticks(ax)) {
    const double px = ax.pixel(t);
    o << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(height - bottom) << "\" x2=\"" << fixed(px) << "\" y2=\""
      << fixed(height - bottom + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(height - bottom + 19) << "\" text-anchor=\"middle\">"
      << tick_label(t, ax.log) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double py = ay.pixel(t);
    o << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(py) << "\" x2=\"" << fixed(left) << "\" y2=\"" << fixed(py)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">" << tick_label(t, ay.log)
      << "</text>\n";
  }
  o << "<text x=\"" << fixed((left + width - right) / 2) << "\" y=\"" << fixed(height - 18)
    << "\" text-anchor=\"middle\">" << escape_xml(plot.x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << fixed((top + height - bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << fixed((top + height - bottom) / 2) << ")\">" << escape_xml(plot.y_label) << "</text>\n";

  std::size_t colour = 0;
  double legend_y = top + 16;
  for (const auto& s : plot.series) {
    const char* stroke = kPalette[colour++ % std::size(kPalette)];
    std::ostringstream pts;
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], plot.log_x) || !usable(s.y[i], plot.log_y)) continue;
      pts << (first ? "" : " ") << fixed(ax.pixel(s.x[i])) << ',' << fixed(ay.pixel(s.y[i]));
      first = false;
    }
    if (first) continue;
    o << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], plot.log_x) || !usable(s.y[i], plot.log_y)) continue;
      o << "<circle cx=\"" << fixed(ax.pixel(s.x[i])) << "\" cy=\"" << fixed(ay.pixel(s.y[i])) << "\" r=\"3\" fill=\""
        << stroke << "\"/>\n";
    }
    if (!s.label.empty()) {
      o << "<text x=\"" << fixed(width - right - 8) << "\" y=\"" << fixed(legend_y) << "\" text-anchor=\"end\" fill=\""
        << stroke << "\">" << escape_xml(s.label) << "</text>\n";
      legend_y += 16;
    }
  }

  if (plot.fit) {
    const LinearFit& f = *plot.fit;
    auto model = [&](double x) {
      if (plot.log_x && plot.log_y) return std::exp(f.intercept) * std::pow(x, f.slope);
      return f.intercept + f.slope * x;
    };
    auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    const double y0 = model(*mn), y1 = model(*mx);
    if (usable(y0, plot.log_y) && usable(y1, plot.log_y)) {
      const int segments = (plot.log_x && !plot.log_y) || (!plot.log_x && plot.log_y) ? 32 : 1;
      std::ostringstream pts;
      for (int k = 0; k <= segments; ++k) {
        const double t = static_cast<double>(k) / segments;
        const double x = plot.log_x ? std::pow(10.0, std::log10(*mn) + t * (std::log10(*mx) - std::log10(*mn)))
                                    : *mn + t * (*mx - *mn);
        const double y = model(x);
        if (!usable(y, plot.log_y)) continue;
        pts << (k ? " " : "") << fixed(ax.pixel(x)) << ',' << fixed(ay.pixel(y));
      }
      o << "<polyline fill=\"none\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"6 4\" points=\"" << pts.str()
        << "\"/>\n";
    }
    char note[96];
    std::snprintf(note, sizeof note, "slope = %.3f (R\xc2\xb2 = %.3f)", f.slope, f.r2);
    o << "<text x=\"" << fixed(left + 10) << "\" y=\"" << fixed(top + 18) << "\">" << note << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_svg(const std::string& path, const PlotSpec& plot) {
  std::size_t points = 0;
  for (const auto& s : plot.series) points += s.x.size();
  if (points == 0) throw ConfigError("emit_svg: refusing to plot an empty series to " + path);
  write_atomically(path, render_svg(plot));
}

PlotSpec sweep_plot(const SweepResult& s, const std::string& title) {
  PlotSpec p;
  p.title = title;
  p.x_label = s.x_label;
  p.y_label = s.y_label;
  p.log_x = p.log_y = true;
  p.series.push_back({s.y_label, s.x, s.y});
  if (s.fit.points >= 2) p.fit = s.fit;
  return p;
}

Json to_json(const LinearFit& fit) {
  return Json{{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"points", fit.points}};
}

Json to_json(const DecayFit& fit) {
  return Json{{"amplitude", fit.amplitude}, {"rate", fit.rate},           {"r2", fit.r2},
              {"bins", fit.bins},           {"min_distance", fit.min_distance}, {"max_distance", fit.max_distance}};
}

Json to_json(const SweepResult& s) {
  Json j = to_json(s.fit);
  j["x_label"] = s.x_label;
  j["y_label"] = s.y_label;
  j["x"] = s.x;
  j["y"] = s.y;
  return j;
}

}  // namespace magspec
