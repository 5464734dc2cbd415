#include "doctest.h"
#include "magspec/error.hpp"
#include "magspec/grid.hpp"
#include "support.hpp"

using namespace magspec;

TEST_SUITE("grid") {

TEST_CASE("coordinates are centred and invert") {
  const Grid g({10, 8, 0.5, Geometry::dirichlet});
  CHECK(g.size() == 80);
  CHECK(g.coordinate(g.index(5, 4)).x1 == doctest::Approx(0.0));
  CHECK(g.coordinate(g.index(5, 4)).x2 == doctest::Approx(0.0));
  CHECK(g.coordinate(g.index(0, 0)).x1 == doctest::Approx(-2.5));
  CHECK(g.coordinate(g.index(0, 0)).x2 == doctest::Approx(-2.0));
  for (int i = 0; i < g.size(); ++i) CHECK(g.index_of(g.coordinate(i)) == i);
  CHECK(g.index_of({0.25, 0.0}) == -1);
}

TEST_CASE("tiny grids are rejected") {
  CHECK_THROWS_AS(Grid({6, 8, 1.0, Geometry::dirichlet}), ConfigError);
  CHECK_THROWS_AS(Grid({8, 8, -1.0, Geometry::torus}), ConfigError);
}

TEST_CASE("neighbour counts") {
  const Grid box({9, 8, 1.0, Geometry::dirichlet});
  CHECK(box.neighbors(box.index(0, 0)).size() == 2);
  CHECK(box.neighbors(box.index(2, 0)).size() == 3);
  CHECK(box.neighbors(box.index(2, 2)).size() == 4);

  const Grid torus({9, 8, 1.0, Geometry::torus});
  for (int i = 0; i < torus.size(); ++i) CHECK(torus.neighbors(i).size() == 4);
  // The seam bond from the last column wraps forward by one box length.
  bool seen_wrap = false;
  for (const Neighbor& nb : torus.neighbors(torus.index(8, 2)))
    if (nb.site == torus.index(0, 2)) seen_wrap = nb.wrap1 == 1;
  CHECK(seen_wrap);
}

TEST_CASE("neighbour relation is symmetric") {
  for (Geometry geo : {Geometry::dirichlet, Geometry::torus}) {
    const Grid g({9, 8, 1.0, geo});
    for (int i = 0; i < g.size(); ++i)
      for (const Neighbor& nb : g.neighbors(i)) {
        CHECK(g.are_neighbors(nb.site, i));
        CHECK(site_distance(g, i, nb.site) == doctest::Approx(1.0));
      }
  }
}

TEST_CASE("minimum image on the torus") {
  const Grid g({8, 8, 1.0, Geometry::torus});
  const Point d = g.displacement(g.index(7, 0), g.index(0, 0));
  CHECK(d.x1 == doctest::Approx(-1.0));
  CHECK(d.x2 == doctest::Approx(0.0));
}

TEST_CASE("window area matches member count") {
  const Grid g({40, 40, 0.5, Geometry::dirichlet});
  for (double l : {1.0, 2.5, 4.0, 7.5}) {
    const BulkWindow w = bulk_window(g, l);
    CHECK(static_cast<double>(w.sites.size()) * g.cell_area() == doctest::Approx(4 * l * l));
    CHECK(w.area == doctest::Approx(4 * l * l));
    CHECK_FALSE(w.clipped);
  }
  const BulkWindow big = bulk_window(g, 30.0);
  CHECK(big.clipped);
}

TEST_CASE("window membership property") {
  testing::Gen gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gen.integer(8, 30);
    const double h = gen.uniform(0.2, 1.5);
    const Grid g({n, n, h, Geometry::dirichlet});
    const double l = gen.uniform(0.5, 0.45 * n * h);
    const BulkWindow w = bulk_window(g, l);
    for (int i = 0; i < g.size(); ++i) {
      const Point x = g.coordinate(i);
      const bool inside = x.x1 > -l - h && x.x1 < l && x.x2 > -l - h && x.x2 < l;
      CHECK(w.contains(i) == inside);
    }
  }
}

}
