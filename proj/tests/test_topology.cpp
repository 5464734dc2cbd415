#include <cmath>

#include "doctest.h"
#include "magspec/error.hpp"
#include "magspec/topology.hpp"
#include "support.hpp"

using namespace magspec;

TEST_SUITE("topology") {

TEST_CASE("position-diagonal projection has zero marker") {
  const Grid g({30, 30, 1.0, Geometry::dirichlet});
  testing::Gen gen(17);
  std::vector<int> chosen;
  for (int i = 0; i < g.size(); ++i)
    if (gen.uniform(0, 1) < 0.3) chosen.push_back(i);
  DenseMatrix basis = DenseMatrix::Zero(g.size(), chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) basis(chosen[k], k) = 1.0;
  const ChernReport r = chern_marker(Projection::from_basis(basis, 1.0), g, {4, 6, 8});
  for (double v : r.values) CHECK(v == 0.0);
}

TEST_CASE("marker windows keep their margin") {
  const Grid g({20, 20, 1.0, Geometry::dirichlet});
  const Projection p = Projection::from_basis(DenseMatrix::Identity(g.size(), 1), 1.0);
  CHECK_THROWS_AS(chern_marker(p, g, {9}), PreconditionError);
}

TEST_CASE("torus IDS is exactly b over 2π") {
  const ModelPtr m = make_model({16, 16, 1.0, Geometry::torus}, FieldProfile::constant());
  for (int p : {2, 3, 4}) {
    const double b = admissible_field(m->grid, m->profile, p);
    const FermiProjection f = fermi_projection(m, b, 2 * b);
    CHECK(f.rank == p);
    const IdsReport r = ids(f.projection, m->grid, {8});
    CHECK(std::abs(r.plateau - b / (2 * M_PI)) < 1e-12);
  }
}

TEST_CASE("IDS sweep recovers c0 = 0 and c1 = 1") {
  const ModelPtr m = make_model({16, 16, 1.0, Geometry::torus}, FieldProfile::constant());
  std::vector<double> fields;
  for (int p : {3, 4, 5}) fields.push_back(admissible_field(m->grid, m->profile, p));
  const double unit = torus_flux_unit(m->grid, m->profile);
  const IdsSweepReport r = ids_sweep(m, fields, 6 * unit, 8 * unit);
  CHECK(std::abs(r.intercept) < 1e-10);
  CHECK(std::abs(r.slope - 1.0) < 1e-8);
  CHECK(r.slope_integer == 1);
}

TEST_CASE("FHS oracle on a small Landau torus") {
  const ModelPtr m = make_model({12, 12, 1.0, Geometry::torus}, FieldProfile::constant());
  const double b = admissible_field(m->grid, m->profile, 2);
  const FhsReport r = fhs_chern_oracle(m, b, 2, 4);
  CHECK(r.chern == 1);
  CHECK(std::abs(r.raw - 1.0) < 1e-6);
  CHECK(r.min_gap > 0);
}

TEST_CASE("projection distance routes agree") {
  testing::Gen gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 40, r1 = gen.integer(1, 6), r2 = gen.integer(1, 6);
    auto random_basis = [&](int r) {
      DenseMatrix a(n, r);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) a(i, j) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
      return DenseMatrix(Eigen::HouseholderQR<DenseMatrix>(a).householderQ() * DenseMatrix::Identity(n, r));
    };
    const Projection p1 = Projection::from_basis(random_basis(r1), 1.0);
    const Projection p2 = Projection::from_basis(random_basis(r2), 1.0);
    const double exact = hermitian_norm(p1.dense() - p2.dense());
    CHECK(projection_distance(p1, p2) == doctest::Approx(exact).epsilon(1e-9));
    const Projection d1 = Projection::from_dense(p1.dense(), 1.0);
    const Projection d2 = Projection::from_dense(p2.dense(), 1.0);
    CHECK(projection_distance(d1, d2) == doctest::Approx(exact).epsilon(1e-7));
  }
}

TEST_CASE("local trace difference of equal projections vanishes") {
  const ModelPtr m = make_model({16, 16, 1.0, Geometry::dirichlet}, FieldProfile::constant());
  const FermiProjection f = fermi_projection(m, 0.4, 0.8);
  const Grid& g = m->grid;
  const SweepResult s = local_trace_difference(f.projection, f.projection, g, {2, 3, 4});
  for (double v : s.y) CHECK(v < 1e-12);
}

TEST_CASE("lowest states refuse to split a degenerate cluster") {
  const ModelPtr m = make_model({12, 12, 1.0, Geometry::torus}, FieldProfile::constant());
  const double b = admissible_field(m->grid, m->profile, 3);
  CHECK_NOTHROW(lowest_states(m, b, 3));
  CHECK_THROWS(lowest_states(m, b, 2));
}

TEST_CASE("Fermi projection refuses an energy on the spectrum") {
  const ModelPtr m = make_model({12, 12, 1.0, Geometry::torus}, FieldProfile::constant());
  const EigenDecomposition e = eigensolve(assemble(m, 0.0));
  CHECK_THROWS(fermi_projection(m, 0.0, e.values(0)));
}

TEST_CASE("strong probe and central patch") {
  const ModelPtr m = make_model({14, 14, 0.5, Geometry::dirichlet}, FieldProfile::constant(), harmonic_well(1.0, 2.5));
  const Vector eta = central_patch(m->grid);
  CHECK(eta.norm() == doctest::Approx(1.0));
  CHECK((eta.array() != cplx(0)).count() == 9);
  const SweepResult s = strong_continuity_probe(m, 1.0, {0.01, 0.02, 0.04}, eta, 2.8);
  CHECK(s.slope() >= 0.85);
}

TEST_CASE("derivative probe on a rank-one island") {
  const ModelPtr m = make_model({12, 12, 0.5, Geometry::dirichlet}, FieldProfile::constant(), harmonic_well(1.0, 2.5));
  const DerivativeProbe p = norm_derivative_probe(m, 1.0, {0.01, 0.02, 0.04, 0.08}, 1.5, 2.9);
  CHECK(p.distance.slope() == doctest::Approx(1.0).epsilon(0.15));
  CHECK(p.remainder.slope() >= 1.7);
  CHECK(p.asymmetry.slope() >= 2.7);
}

}
