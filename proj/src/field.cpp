#include "magspec/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "magspec/error.hpp"
#include "magspec/quadrature.hpp"

namespace magspec {

namespace {

constexpr double kPi = std::numbers::pi;

// Periodic interpolation kernel on m equispaced nodes, s in units of the period.
double trig_kernel(int m, double s) {
  const double sn = std::sin(kPi * s);
  if (std::abs(sn) < 1e-14) {
    // s is an integer: the kernel is 1 at s = 0 mod 1. For even m it is (-1)^(m s) = 1 too.
    return 1.0;
  }
  if (m % 2 == 1) return std::sin(m * kPi * s) / (m * sn);
  return std::sin(m * kPi * s) * std::cos(kPi * s) / (m * sn);
}

std::size_t bracket(const std::vector<double>& axis, double x, double& frac) {
  if (x <= axis.front()) { frac = 0.0; return 0; }
  if (x >= axis.back()) { frac = 1.0; return axis.size() - 2; }
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - axis.begin()) - 1;
  frac = (x - axis[k]) / (axis[k + 1] - axis[k]);
  return k;
}

}  // namespace

FieldProfile FieldProfile::constant(double amplitude) {
  if (!std::isfinite(amplitude)) throw ConfigError("field amplitude must be finite");
  FieldProfile p;
  p.kind_ = Kind::constant;
  p.amplitude_ = amplitude;
  p.sup_ = std::abs(amplitude);
  return p;
}

FieldProfile FieldProfile::periodic(std::vector<double> samples, int m1, int m2, double period1, double period2,
                                    Point origin) {
  if (m1 < 1 || m2 < 1 || samples.size() != static_cast<std::size_t>(m1) * m2)
    throw ConfigError("periodic field: sample table size does not match its dimensions");
  if (!(period1 > 0) || !(period2 > 0)) throw ConfigError("periodic field: periods must be positive");
  for (double v : samples)
    if (!std::isfinite(v)) throw ConfigError("periodic field: non-finite sample");
  FieldProfile p;
  p.kind_ = Kind::periodic;
  p.samples_ = std::move(samples);
  p.m1_ = m1;
  p.m2_ = m2;
  p.period1_ = period1;
  p.period2_ = period2;
  p.origin_ = origin;
  double sup = 0.0;
  const int over = 4;
  for (int k2 = 0; k2 < over * m2; ++k2)
    for (int k1 = 0; k1 < over * m1; ++k1) {
      const Point x = origin + Point{k1 * period1 / (over * m1), k2 * period2 / (over * m2)};
      sup = std::max(sup, std::abs(p(x)));
    }
  p.sup_ = sup;
  return p;
}

FieldProfile FieldProfile::tabulated(std::vector<double> axis1, std::vector<double> axis2,
                                     std::vector<double> values) {
  if (axis1.size() < 2 || axis2.size() < 2) throw ConfigError("tabulated field: need at least 2x2 samples");
  if (values.size() != axis1.size() * axis2.size())
    throw ConfigError("tabulated field: value count does not match axes");
  if (!std::is_sorted(axis1.begin(), axis1.end()) || !std::is_sorted(axis2.begin(), axis2.end()) ||
      std::adjacent_find(axis1.begin(), axis1.end()) != axis1.end() ||
      std::adjacent_find(axis2.begin(), axis2.end()) != axis2.end())
    throw ConfigError("tabulated field: axes must be strictly increasing");
  FieldProfile p;
  p.kind_ = Kind::tabulated;
  p.axis1_ = std::move(axis1);
  p.axis2_ = std::move(axis2);
  p.samples_ = std::move(values);
  double sup = 0.0;
  for (double v : p.samples_) {
    if (!std::isfinite(v)) throw ConfigError("tabulated field: non-finite value");
    sup = std::max(sup, std::abs(v));
  }
  p.sup_ = sup;
  return p;
}

FieldProfile FieldProfile::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field table " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("field table " + path + " is empty");
  std::string header;
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) header += c;
  if (header != "x1,x2,value") throw ConfigError("field table " + path + ": header must be x1,x2,value");

  std::map<std::pair<double, double>, double> table;
  std::vector<double> a1, a2;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    double v[3];
    char sep;
    if (!(row >> v[0] >> sep >> v[1] >> sep >> v[2]))
      throw ConfigError("field table " + path + ": malformed row " + std::to_string(lineno));
    table[{v[1], v[0]}] = v[2];
    a1.push_back(v[0]);
    a2.push_back(v[1]);
  }
  auto uniq = [](std::vector<double>& a) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  };
  uniq(a1);
  uniq(a2);
  if (table.size() != a1.size() * a2.size())
    throw ConfigError("field table " + path + ": samples do not form a rectangular lattice");
  std::vector<double> values;
  values.reserve(table.size());
  for (const auto& [key, value] : table) values.push_back(value);  // ordered by (x2, x1)
  return tabulated(std::move(a1), std::move(a2), std::move(values));
}

double FieldProfile::operator()(Point x) const {
  switch (kind_) {
    case Kind::constant:
      return amplitude_;
    case Kind::periodic: {
      const double t1 = (x.x1 - origin_.x1) / period1_;
      const double t2 = (x.x2 - origin_.x2) / period2_;
      double acc = 0.0;
      std::vector<double> k1(m1_);
      for (int j1 = 0; j1 < m1_; ++j1) k1[j1] = trig_kernel(m1_, t1 - static_cast<double>(j1) / m1_);
      for (int j2 = 0; j2 < m2_; ++j2) {
        const double k2 = trig_kernel(m2_, t2 - static_cast<double>(j2) / m2_);
        if (k2 == 0.0) continue;
        double row = 0.0;
        for (int j1 = 0; j1 < m1_; ++j1) row += samples_[static_cast<std::size_t>(j2) * m1_ + j1] * k1[j1];
        acc += row * k2;
      }
      return acc;
    }
    case Kind::tabulated: {
      double f1, f2;
      const std::size_t k1 = bracket(axis1_, x.x1, f1);
      const std::size_t k2 = bracket(axis2_, x.x2, f2);
      const std::size_t w = axis1_.size();
      const double v00 = samples_[k2 * w + k1], v10 = samples_[k2 * w + k1 + 1];
      const double v01 = samples_[(k2 + 1) * w + k1], v11 = samples_[(k2 + 1) * w + k1 + 1];
      return (1 - f1) * (1 - f2) * v00 + f1 * (1 - f2) * v10 + (1 - f1) * f2 * v01 + f1 * f2 * v11;
    }
  }
  return 0.0;
}

std::string FieldProfile::describe() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::constant: s << "constant(" << amplitude_ << ")"; break;
    case Kind::periodic: s << "periodic(" << m1_ << "x" << m2_ << ")"; break;
    case Kind::tabulated: s << "tabulated(" << axis1_.size() << "x" << axis2_.size() << ")"; break;
  }
  return s.str();
}

Point vector_potential(const FieldProfile& profile, Point base, Point x, int quad_order) {
  const Point d = x - base;
  double coef;
  if (profile.is_constant()) {
    coef = 0.5 * profile.amplitude();
  } else {
    const auto& q = gauss_legendre(quad_order);
    coef = 0.0;
    for (int i = 0; i < quad_order; ++i) {
      const double s = q.nodes[i];
      coef += q.weights[i] * s * profile(base + d * s);
    }
  }
  return {-coef * d.x2, coef * d.x1};
}

double peierls_phase(const FieldProfile& profile, Point x, Point y, int quad_order) {
  const double area_form = wedge(x, y);
  if (profile.is_constant()) return -0.5 * profile.amplitude() * area_form;
  const auto& q = gauss_legendre(quad_order);
  const Point d = x - y;
  double acc = 0.0;
  for (int i = 0; i < quad_order; ++i) {
    const Point p = y + d * q.nodes[i];
    double inner = 0.0;
    for (int k = 0; k < quad_order; ++k) {
      const double t = q.nodes[k];
      inner += q.weights[k] * t * profile(p * t);
    }
    acc += q.weights[i] * inner;
  }
  return -acc * area_form;
}

double peierls_phase_line(const FieldProfile& profile, Point x, Point y, int quad_order) {
  const auto& q = gauss_legendre(quad_order);
  const Point d = x - y;
  double acc = 0.0;
  for (int i = 0; i < quad_order; ++i) {
    const Point a = vector_potential(profile, Point{}, y + d * q.nodes[i], quad_order);
    acc += q.weights[i] * dot(a, d);
  }
  return acc;
}

double triangle_flux(const FieldProfile& profile, Point x, Point y, Point xp, int quad_order) {
  const Point e1 = y - x;
  const Point e2 = xp - x;
  const double jac = wedge(e1, e2);
  if (profile.is_constant()) return -0.5 * profile.amplitude() * jac;
  // Collapsed coordinates: p = x + s e1 + t (1 - s) e2 over the unit square.
  const auto& q = gauss_legendre(quad_order);
  double acc = 0.0;
  for (int i = 0; i < quad_order; ++i) {
    const double s = q.nodes[i];
    double inner = 0.0;
    for (int k = 0; k < quad_order; ++k) inner += q.weights[k] * profile(x + e1 * s + e2 * (q.nodes[k] * (1 - s)));
    acc += q.weights[i] * (1 - s) * inner;
  }
  return -jac * acc;
}

double composition_defect(const FieldProfile& profile, Point x, Point y, Point xp, int quad_order) {
  return peierls_phase(profile, x, y, quad_order) + peierls_phase(profile, y, xp, quad_order) -
         peierls_phase(profile, x, xp, quad_order) - triangle_flux(profile, x, y, xp, quad_order);
}

std::complex<double> link_phase(const Grid& grid, const FieldProfile& profile, double b, int i, int j,
                                int quad_order) {
  const Neighbor* bond = nullptr;
  for (const auto& nb : grid.neighbors(i))
    if (nb.site == j) bond = &nb;
  if (!bond) throw ConfigError("link_phase: sites are not nearest neighbours");
  const Point x = grid.coordinate(i);
  const Point y = grid.coordinate(j);
  if (bond->wrap1 == 0 && bond->wrap2 == 0) return std::polar(1.0, b * peierls_phase(profile, x, y, quad_order));
  if (!profile.is_constant())
    throw PreconditionError("torus_requires_constant_field", "torus geometry supports constant field profiles only");
  // Seam bond: hop from the image y + T, then pull back with the magnetic translation factor.
  const Point shift{bond->wrap1 * grid.length1(), bond->wrap2 * grid.length2()};
  const double translation = 0.5 * profile.amplitude() * wedge(shift, y);
  return std::polar(1.0, b * (peierls_phase(profile, x, y + shift, quad_order) + translation));
}

double background_line_integral(const BackgroundPotential& background, Point x, Point y, int quad_order) {
  if (!background.has_vector()) return 0.0;
  const auto& q = gauss_legendre(quad_order);
  const Point d = x - y;
  double acc = 0.0;
  for (int i = 0; i < quad_order; ++i) acc += q.weights[i] * dot(background.vector_potential(y + d * q.nodes[i]), d);
  return acc;
}

double torus_flux_unit(const Grid& grid, const FieldProfile& profile) {
  const double total = profile.amplitude() * grid.length1() * grid.length2();
  if (total == 0.0) return 0.0;
  return 2.0 * kPi / std::abs(total);
}

double admissible_field(const Grid& grid, const FieldProfile& profile, int flux_quanta) {
  return flux_quanta * torus_flux_unit(grid, profile);
}

void check_torus_flux(const Grid& grid, const FieldProfile& profile, double b) {
  if (grid.geometry() != Geometry::torus) return;
  if (!profile.is_constant())
    throw PreconditionError("torus_requires_constant_field", "torus geometry supports constant field profiles only");
  const double unit = torus_flux_unit(grid, profile);
  if (unit == 0.0 || b == 0.0) return;
  const double quanta = b / unit;
  const double nearest = std::round(quanta);
  if (std::abs(quanta - nearest) <= 1e-9 * std::max(1.0, std::abs(quanta))) return;
  std::ostringstream msg;
  msg.precision(12);
  msg << "field strength b=" << b << " is not flux-quantized on the " << grid.n1() << "x" << grid.n2()
      << " torus; nearest admissible b: " << std::floor(quanta) * unit << " (p=" << std::floor(quanta) << "), "
      << std::ceil(quanta) * unit << " (p=" << std::ceil(quanta) << ")";
  throw PreconditionError("flux_not_quantized", msg.str());
}

BackgroundPotential harmonic_well(double omega, double cutoff_radius) {
  if (!(omega > 0) || !(cutoff_radius > 0)) throw ConfigError("harmonic_well: ω and cutoff must be positive");
  BackgroundPotential bg;
  const double w2 = omega * omega, r2 = cutoff_radius * cutoff_radius;
  bg.scalar = [w2, r2](Point x) { return w2 * std::min(dot(x, x), r2); };
  bg.label = "harmonic_well";
  return bg;
}

}  // namespace magspec
