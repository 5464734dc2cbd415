#include "magspec/grid.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "magspec/error.hpp"

namespace magspec {

void log_warning(const std::string& message) { std::cerr << "magspec: warning: " << message << '\n'; }

const char* to_string(Geometry g) { return g == Geometry::torus ? "torus" : "dirichlet"; }

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  if (spec.n1 < 8 || spec.n2 < 8) {
    std::ostringstream msg;
    msg << "grid dimensions must be at least 8 per axis, got " << spec.n1 << "x" << spec.n2;
    throw ConfigError(msg.str());
  }
  if (!(spec.h > 0.0) || !std::isfinite(spec.h)) throw ConfigError("lattice spacing h must be positive");

  const int n = size();
  offsets_.reserve(n + 1);
  neighbors_.reserve(4 * static_cast<std::size_t>(n));
  const bool torus = spec.geometry == Geometry::torus;
  constexpr int steps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int idx = 0; idx < n; ++idx) {
    offsets_.push_back(static_cast<int>(neighbors_.size()));
    const auto [i1, i2] = site(idx);
    for (const auto& s : steps) {
      int j1 = i1 + s[0];
      int j2 = i2 + s[1];
      int w1 = 0;
      int w2 = 0;
      if (j1 < 0 || j1 >= spec.n1 || j2 < 0 || j2 >= spec.n2) {
        if (!torus) continue;
        if (j1 < 0) { j1 += spec.n1; w1 = -1; }
        if (j1 >= spec.n1) { j1 -= spec.n1; w1 = 1; }
        if (j2 < 0) { j2 += spec.n2; w2 = -1; }
        if (j2 >= spec.n2) { j2 -= spec.n2; w2 = 1; }
      }
      neighbors_.push_back({index(j1, j2), w1, w2});
    }
  }
  offsets_.push_back(static_cast<int>(neighbors_.size()));
}

Point Grid::coordinate(int idx) const {
  const auto [i1, i2] = site(idx);
  return {(i1 - 0.5 * spec_.n1) * spec_.h, (i2 - 0.5 * spec_.n2) * spec_.h};
}

int Grid::index_of(Point p) const {
  const double f1 = p.x1 / spec_.h + 0.5 * spec_.n1;
  const double f2 = p.x2 / spec_.h + 0.5 * spec_.n2;
  const double r1 = std::round(f1);
  const double r2 = std::round(f2);
  if (std::abs(f1 - r1) > 1e-9 || std::abs(f2 - r2) > 1e-9) return -1;
  if (r1 < 0 || r1 >= spec_.n1 || r2 < 0 || r2 >= spec_.n2) return -1;
  return index(static_cast<int>(r1), static_cast<int>(r2));
}

std::span<const Neighbor> Grid::neighbors(int idx) const {
  return {neighbors_.data() + offsets_[idx], neighbors_.data() + offsets_[idx + 1]};
}

bool Grid::are_neighbors(int i, int j) const {
  for (const auto& nb : neighbors(i))
    if (nb.site == j) return true;
  return false;
}

Point Grid::displacement(int i, int j) const {
  Point d = coordinate(i) - coordinate(j);
  if (spec_.geometry == Geometry::torus) {
    const double l1 = length1();
    const double l2 = length2();
    d.x1 -= l1 * std::round(d.x1 / l1);
    d.x2 -= l2 * std::round(d.x2 / l2);
  }
  return d;
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

BulkWindow bulk_window(const Grid& grid, double half_width) {
  if (!(half_width > 0.0)) throw ConfigError("bulk window half-width must be positive");
  BulkWindow w;
  w.half_width = half_width;
  const double h = grid.h();
  const double half1 = 0.5 * grid.length1();
  const double half2 = 0.5 * grid.length2();
  w.clipped = half_width > half1 + 1e-12 * h || half_width > half2 + 1e-12 * h;
  if (w.clipped) {
    std::ostringstream msg;
    msg << "bulk window half-width " << half_width << " exceeds the box; window is clipped";
    log_warning(msg.str());
  }
  w.area = 4.0 * std::min(half_width, half1) * std::min(half_width, half2);
  w.mask.assign(grid.size(), 0);
  const double tol = 1e-9 * h;
  for (int i = 0; i < grid.size(); ++i) {
    const Point p = grid.coordinate(i);
    const bool in1 = p.x1 > -half_width - h + tol && p.x1 < half_width - tol;
    const bool in2 = p.x2 > -half_width - h + tol && p.x2 < half_width - tol;
    if (in1 && in2) {
      w.mask[i] = 1;
      w.sites.push_back(i);
    }
  }
  return w;
}

double site_distance(const Grid& grid, int i, int j) { return grid.displacement(i, j).norm(); }

}  // namespace magspec
