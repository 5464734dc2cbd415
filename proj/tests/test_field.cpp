#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "doctest.h"
#include "magspec/error.hpp"
#include "magspec/field.hpp"
#include "support.hpp"

using namespace magspec;
using boost::math::quadrature::gauss_kronrod;

namespace {

// Independent adaptive-quadrature versions of the transversal gauge.
double radial_weight(const FieldProfile& f, Point base, Point x) {
  const Point d = x - base;
  auto integrand = [&](double s) { return s * f(base + d * s); };
  return gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-14);
}

Point oracle_potential(const FieldProfile& f, Point base, Point x) {
  const Point d = x - base;
  const double w = radial_weight(f, base, x);
  return {-w * d.x2, w * d.x1};
}

double oracle_phase(const FieldProfile& f, Point x, Point y) {
  const Point d = x - y;
  auto integrand = [&](double t) { return dot(oracle_potential(f, {}, y + d * t), d); };
  return gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-13);
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("profiles evaluate") {
  CHECK(FieldProfile::constant(2.5)({3, -1}) == 2.5);
  const FieldProfile f = testing::cosine_profile(0.3);
  for (double x : {0.0, 0.7, 2.0, -4.1}) CHECK(f({x, 1.3}) == doctest::Approx(1 + 0.3 * std::cos(x)).epsilon(1e-12));
  CHECK(f.sup_bound() == doctest::Approx(1.3).epsilon(1e-6));

  const FieldProfile t = FieldProfile::tabulated({0, 1}, {0, 1}, {0, 1, 2, 3});
  CHECK(t({0.5, 0.5}) == doctest::Approx(1.5));
  CHECK(t({5, 5}) == doctest::Approx(3.0));
}

TEST_CASE("frozen transversal gauge values") {
  const FieldProfile f = testing::cosine_profile(0.3);
  const Point a = vector_potential(f, {1, 1}, {3, 1});
  CHECK(std::abs(a.x1) < 1e-14);
  CHECK(a.x2 == doctest::Approx(0.812791782047672390).epsilon(1e-13));

  const FieldProfile g = testing::cos_cos_profile(0.3);
  CHECK(peierls_phase(g, {1, 2}, {-1, 0}) == doctest::Approx(-1.19875912667771152).epsilon(1e-12));
  CHECK(triangle_flux(g, {0.5, -1}, {2, 0.5}, {-1.5, 1.25}) == doctest::Approx(-3.78622609540932417).epsilon(1e-11));
}

TEST_CASE("phase agrees with adaptive quadrature oracle") {
  testing::Gen gen(3);
  const FieldProfile f = testing::cos_cos_profile(0.4);
  for (int k = 0; k < 20; ++k) {
    const Point x = gen.point(4), y = gen.point(4);
    CHECK(peierls_phase(f, x, y, 32) == doctest::Approx(oracle_phase(f, x, y)).epsilon(1e-11));
    CHECK(peierls_phase_line(f, x, y, 32) == doctest::Approx(oracle_phase(f, x, y)).epsilon(1e-11));
    const Point a = vector_potential(f, y, x, 32), b = oracle_potential(f, y, x);
    CHECK(a.x1 == doctest::Approx(b.x1).epsilon(1e-12));
    CHECK(a.x2 == doctest::Approx(b.x2).epsilon(1e-12));
  }
}

TEST_CASE("constant field closed form") {
  testing::Gen gen(5);
  for (int k = 0; k < 100; ++k) {
    const double c = gen.uniform(-2, 2);
    const FieldProfile f = FieldProfile::constant(c);
    const Point x = gen.point(10), y = gen.point(10), z = gen.point(10);
    CHECK(std::abs(peierls_phase(f, x, y) + 0.5 * c * wedge(x, y)) < 1e-12);
    CHECK(std::abs(triangle_flux(f, x, y, z) + 0.5 * c * wedge(y - x, z - x)) < 1e-10);
  }
}

TEST_CASE("antisymmetry and composition identity") {
  testing::Gen gen(7);
  for (int trial = 0; trial < 5; ++trial) {
    const FieldProfile f = gen.periodic_field(8, 6.0, 0.5);
    for (int k = 0; k < 20; ++k) {
      const Point x = gen.point(5), y = gen.point(5), z = gen.point(5);
      CHECK(std::abs(peierls_phase(f, x, y) + peierls_phase(f, y, x)) <= 1e-12);
      CHECK(composition_defect(f, x, y, z, 32) <= 1e-8);
    }
  }
}

TEST_CASE("gauge base change is a gradient") {
  // A_y - A_0 = ∇_x φ(x, y) for the two transversal gauges; checked by central differences.
  const FieldProfile f = testing::cos_cos_profile(0.3);
  const Point y{0.7, -1.1}, x{1.9, 0.4};
  const double step = 1e-5;
  const Point a_y = vector_potential(f, y, x, 32), a_0 = vector_potential(f, {}, x, 32);
  const double g1 = (peierls_phase(f, x + Point{step, 0}, y, 32) - peierls_phase(f, x - Point{step, 0}, y, 32)) / (2 * step);
  const double g2 = (peierls_phase(f, x + Point{0, step}, y, 32) - peierls_phase(f, x - Point{0, step}, y, 32)) / (2 * step);
  CHECK(a_0.x1 - a_y.x1 == doctest::Approx(g1).epsilon(1e-7));
  CHECK(a_0.x2 - a_y.x2 == doctest::Approx(g2).epsilon(1e-7));
}

TEST_CASE("torus flux quantization") {
  const Grid g({12, 12, 1.0, Geometry::torus});
  const FieldProfile f = FieldProfile::constant();
  CHECK(torus_flux_unit(g, f) == doctest::Approx(2 * M_PI / 144));
  CHECK(admissible_field(g, f, 5) == doctest::Approx(5 * 2 * M_PI / 144));
  CHECK_NOTHROW(check_torus_flux(g, f, admissible_field(g, f, 3)));
  try {
    check_torus_flux(g, f, 0.1);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(e.reason() == "flux_not_quantized");
    CHECK(std::string(e.what()).find("nearest admissible") != std::string::npos);
  }
}

TEST_CASE("link phases are unimodular and conjugate") {
  const Grid g({8, 8, 1.0, Geometry::torus});
  const FieldProfile f = FieldProfile::constant();
  const double b = admissible_field(g, f, 2);
  for (int i = 0; i < g.size(); ++i)
    for (const Neighbor& nb : g.neighbors(i)) {
      const auto u = link_phase(g, f, b, nb.site, i);
      CHECK(std::abs(std::abs(u) - 1.0) < 1e-14);
      CHECK(std::abs(u * link_phase(g, f, b, i, nb.site) - 1.0) < 1e-12);
    }
  CHECK_THROWS_AS(link_phase(g, f, b, 0, g.index(3, 3)), ConfigError);
}

TEST_CASE("harmonic well") {
  const BackgroundPotential w = harmonic_well(2.0, 1.5);
  CHECK(w.scalar({1, 0}) == doctest::Approx(4.0));
  CHECK(w.scalar({3, 4}) == doctest::Approx(9.0));
  CHECK_FALSE(w.has_vector());
}

}
