#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "magspec/grid.hpp"

namespace magspec {

// Magnetic field profile 𝔟(x). The physical field is b·𝔟(x); b is applied downstream.
class FieldProfile {
 public:
  enum class Kind { constant, periodic, tabulated };

  static FieldProfile constant(double amplitude = 1.0);
  // samples[j2 * m1 + j1] is the value at origin + (j1 * period1 / m1, j2 * period2 / m2).
  // Evaluated by trigonometric interpolation, which is smooth and exact at the samples.
  static FieldProfile periodic(std::vector<double> samples, int m1, int m2, double period1, double period2,
                               Point origin = {});
  // values[j2 * axis1.size() + j1] at (axis1[j1], axis2[j2]); bilinear, clamped outside the table.
  static FieldProfile tabulated(std::vector<double> axis1, std::vector<double> axis2, std::vector<double> values);
  // CSV with header "x1,x2,value" on a rectangular lattice, rows in any order.
  static FieldProfile from_csv(const std::string& path);

  double operator()(Point x) const;

  Kind kind() const { return kind_; }
  double amplitude() const { return amplitude_; }
  bool is_constant() const { return kind_ == Kind::constant; }
  // Bound on sup |𝔟| from samples (oversampled for the periodic kind).
  double sup_bound() const { return sup_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::constant;
  double amplitude_ = 1.0;
  std::vector<double> samples_;
  std::vector<double> axis1_, axis2_;
  int m1_ = 0, m2_ = 0;
  double period1_ = 0, period2_ = 0;
  Point origin_;
  double sup_ = 0.0;
};

// Bounded background: vector potential 𝒜 entering as (-i∇ - bA + 𝒜)^2, and scalar V.
struct BackgroundPotential {
  std::function<Point(Point)> vector_potential;
  std::function<double(Point)> scalar;
  std::string label = "none";

  bool has_vector() const { return static_cast<bool>(vector_potential); }
  bool has_scalar() const { return static_cast<bool>(scalar); }
};

inline constexpr int kDefaultQuadOrder = 16;

// Transversal-gauge vector potential based at y, evaluated at x.
Point vector_potential(const FieldProfile& profile, Point base, Point x, int quad_order = kDefaultQuadOrder);

// φ(x, y): line integral of the origin-based potential along the segment y → x.
double peierls_phase(const FieldProfile& profile, Point x, Point y, int quad_order = kDefaultQuadOrder);
// The same quantity computed as a nested line integral of vector_potential().
double peierls_phase_line(const FieldProfile& profile, Point x, Point y, int quad_order = kDefaultQuadOrder);

// fl(x, y, x') := φ(x, y) + φ(y, x') - φ(x, x') computed as a surface integral.
// By Stokes this is the flux through the triangle traversed x → x' → y, i.e. minus
// the counter-clockwise flux of (x, y, x').
double triangle_flux(const FieldProfile& profile, Point x, Point y, Point xp, int quad_order = kDefaultQuadOrder);

double composition_defect(const FieldProfile& profile, Point x, Point y, Point xp, int quad_order = 32);

// Peierls factor for the bond from site j to its neighbour i, including the
// magnetic translation factor on torus seam bonds. Errors if i, j are not neighbours.
std::complex<double> link_phase(const Grid& grid, const FieldProfile& profile, double b, int i, int j,
                                int quad_order = kDefaultQuadOrder);

// Line integral of the background vector potential along the segment y → x.
double background_line_integral(const BackgroundPotential& background, Point x, Point y,
                                int quad_order = kDefaultQuadOrder);

// Torus flux quantization b·amplitude·n1·n2·h² ∈ 2πℤ.
double torus_flux_unit(const Grid& grid, const FieldProfile& profile);
void check_torus_flux(const Grid& grid, const FieldProfile& profile, double b);
double admissible_field(const Grid& grid, const FieldProfile& profile, int flux_quanta);

// V(x) = ω² min(‖x‖², r_c²): harmonic well flattened beyond the cutoff radius.
BackgroundPotential harmonic_well(double omega, double cutoff_radius);

}  // namespace magspec
