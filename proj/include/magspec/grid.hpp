#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace magspec {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;

  Point operator+(Point o) const { return {x1 + o.x1, x2 + o.x2}; }
  Point operator-(Point o) const { return {x1 - o.x1, x2 - o.x2}; }
  Point operator*(double s) const { return {x1 * s, x2 * s}; }
  double norm() const { return std::hypot(x1, x2); }
};

// Oriented area form a ∧ b = a1 b2 - a2 b1.
inline double wedge(Point a, Point b) { return a.x1 * b.x2 - a.x2 * b.x1; }
inline double dot(Point a, Point b) { return a.x1 * b.x1 + a.x2 * b.x2; }

enum class Geometry { torus, dirichlet };

const char* to_string(Geometry g);

struct GridSpec {
  int n1 = 8;
  int n2 = 8;
  double h = 1.0;
  Geometry geometry = Geometry::dirichlet;
};

// A nearest-neighbour bond. On the torus, `wrap` counts how many box lengths
// the geometric neighbour sits away from the stored site: the neighbour's
// physical position is coordinate(site) + (wrap1 * n1 h, wrap2 * n2 h).
struct Neighbor {
  int site = 0;
  int wrap1 = 0;
  int wrap2 = 0;
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int n1() const { return spec_.n1; }
  int n2() const { return spec_.n2; }
  double h() const { return spec_.h; }
  double cell_area() const { return spec_.h * spec_.h; }
  Geometry geometry() const { return spec_.geometry; }
  int size() const { return spec_.n1 * spec_.n2; }

  // Side lengths of the box (period lengths on the torus).
  double length1() const { return spec_.n1 * spec_.h; }
  double length2() const { return spec_.n2 * spec_.h; }

  int index(int i1, int i2) const { return i2 * spec_.n1 + i1; }
  std::array<int, 2> site(int idx) const { return {idx % spec_.n1, idx / spec_.n1}; }
  Point coordinate(int idx) const;
  // Inverse of coordinate(); returns -1 if the point is not a lattice site.
  int index_of(Point p) const;

  std::span<const Neighbor> neighbors(int idx) const;
  bool are_neighbors(int i, int j) const;

  // Displacement coordinate(i) - coordinate(j); minimum image on the torus.
  Point displacement(int i, int j) const;

 private:
  GridSpec spec_;
  std::vector<Neighbor> neighbors_;
  std::vector<int> offsets_;
};

Grid build_grid(const GridSpec& spec);

struct BulkWindow {
  double half_width = 0.0;
  std::vector<int> sites;
  std::vector<char> mask;  // mask[i] != 0 iff site i is a member
  double area = 0.0;
  bool clipped = false;

  bool contains(int i) const { return mask[i] != 0; }
};

// Sites of [-L, L]^2. Each site owns the lattice cell [x, x + h)^2 and belongs
// to the window when its cell overlaps the square, so the member count times h^2
// equals the window area whenever L is a multiple of h.
BulkWindow bulk_window(const Grid& grid, double half_width);

double site_distance(const Grid& grid, int i, int j);

}  // namespace magspec
