#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "magspec/error.hpp"
#include "magspec/gcmpt.hpp"
#include "magspec/hamiltonian.hpp"
#include "magspec/spectral.hpp"
#include "support.hpp"

using namespace magspec;

TEST_SUITE("operator") {

TEST_CASE("zero field torus matches the Fourier formula") {
  const int n = 16;
  const double h = 0.5;
  const ModelPtr m = make_model({n, n, h, Geometry::torus}, FieldProfile::constant());
  const EigenDecomposition eig = eigensolve(assemble(m, 0.0));
  std::vector<double> expect;
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2)
      expect.push_back((4 - 2 * std::cos(2 * M_PI * k1 / n) - 2 * std::cos(2 * M_PI * k2 / n)) / (h * h));
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < n * n; ++k) CHECK(std::abs(eig.values(k) - expect[k]) < 1e-11);
}

TEST_CASE("frozen Dirichlet spectra") {
  // Reference eigenvalues from an independent dense build in numpy.
  const ModelPtr landau = make_model({10, 10, 1.0, Geometry::dirichlet}, FieldProfile::constant());
  const EigenDecomposition a = eigensolve(assemble(landau, 0.3));
  const double la[] = {0.3025622785298497, 0.3472888435629892, 0.4332294471753009,
                       0.5611247687749609, 0.7261432706951696, 0.9088777608310247};
  for (int k = 0; k < 6; ++k) CHECK(std::abs(a.values(k) - la[k]) < 1e-12);

  const ModelPtr well = make_model({12, 12, 0.5, Geometry::dirichlet}, FieldProfile::constant(), harmonic_well(1.0, 2.5));
  const EigenDecomposition w1 = eigensolve(assemble(well, 1.0));
  const EigenDecomposition w2 = eigensolve(assemble(well, 1.1));
  const double l1[] = {2.179485366153777, 3.3838757384934794, 4.577026040437202, 5.215918454192244};
  const double l2[] = {2.220536698394575, 3.3734233390495376, 4.516817591291922, 5.379836904818975};
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(w1.values(k) - l1[k]) < 1e-11);
    CHECK(std::abs(w2.values(k) - l2[k]) < 1e-11);
  }
}

TEST_CASE("Dirichlet diagonal and hopping") {
  const ModelPtr m = make_model({8, 8, 0.5, Geometry::dirichlet}, FieldProfile::constant());
  const DenseMatrix d = assemble(m, 0.7).dense();
  for (int i = 0; i < 64; ++i) CHECK(std::abs(d(i, i) - 16.0) < 1e-14);
  const Grid& g = m->grid;
  for (int i = 0; i < g.size(); ++i)
    for (const Neighbor& nb : g.neighbors(i)) CHECK(std::abs(std::abs(d(i, nb.site)) - 4.0) < 1e-13);
}

TEST_CASE("operator is Hermitian for random models") {
  testing::Gen gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Geometry geo = trial % 2 ? Geometry::torus : Geometry::dirichlet;
    const int n = gen.integer(8, 14);
    FieldProfile f = geo == Geometry::torus ? FieldProfile::constant() : gen.periodic_field(8, 5.0, 0.5);
    BackgroundPotential bg;
    bg.scalar = [](Point x) { return 0.1 * std::cos(x.x1) * std::cos(x.x2); };
    bg.vector_potential = [](Point x) { return Point{0.05 * std::sin(x.x2), 0.05 * std::sin(x.x1)}; };
    const ModelPtr m = make_model({n, n, 1.0, geo}, f, bg);
    const double b = geo == Geometry::torus ? admissible_field(m->grid, f, gen.integer(0, 4)) : gen.uniform(0, 1);
    const DiscreteHamiltonian h = assemble(m, b);
    CHECK(h.hermiticity_defect() < 1e-14);
    CHECK(h.norm_bound() >= hermitian_norm(h.dense()) - 1e-12);
  }
}

TEST_CASE("field increment is a Peierls dressing") {
  testing::Gen gen(8);
  const FieldProfile f = gen.periodic_field(8, 6.0, 0.4);
  const ModelPtr m = make_model({10, 10, 0.6, Geometry::dirichlet}, f);
  const double b0 = 0.8, eps = 0.13;
  const DenseMatrix h0 = assemble(m, b0).dense(), h1 = assemble(m, b0 + eps).dense();
  const DenseMatrix phases = dressing_phases(m->grid, f, eps);
  DenseMatrix dressed = h0.cwiseProduct(phases);
  dressed.diagonal() = h1.diagonal();
  CHECK(testing::max_abs(dressed - h1) < 1e-12);
  CHECK(testing::max_abs(DenseMatrix(perturbation_operator(assemble(m, b0 + eps), assemble(m, b0))) - (h1 - h0)) < 1e-14);
}

TEST_CASE("gauge covariance") {
  testing::Gen gen(4);
  for (Geometry geo : {Geometry::dirichlet, Geometry::torus}) {
    const ModelPtr m = make_model({10, 10, 1.0, geo}, FieldProfile::constant());
    const double b = admissible_field(m->grid, FieldProfile::constant(), 3);
    const Eigen::VectorXd theta = gen.gauge(m->grid.size());
    const DiscreteHamiltonian h = assemble(m, b);
    const DiscreteHamiltonian hg = gauge_transform(h, theta);
    const DiscreteHamiltonian ha = assemble_gauged(m, b, theta);
    CHECK(testing::max_abs(hg.dense() - ha.dense()) < 1e-13);

    const EigenDecomposition e = eigensolve(h), eg = eigensolve(hg);
    CHECK((e.values - eg.values).cwiseAbs().maxCoeff() < 1e-10);

    const cplx z{0.4, 0.3};
    const DenseMatrix r = resolvent(h, z).op, rg = resolvent(hg, z).op;
    const Vector u = (cplx(0, 1) * theta.cast<cplx>()).array().exp().matrix();
    const DenseMatrix expect = u.asDiagonal() * r * u.conjugate().asDiagonal();
    CHECK(testing::max_abs(rg - expect) < 1e-10);

    // Dressed resolvents transform the same way.
    const DenseMatrix s = quasi_inverse_S(h, z, 0.02).op, sg = quasi_inverse_S(hg, z, 0.02).op;
    CHECK(testing::max_abs(sg - u.asDiagonal() * s * u.conjugate().asDiagonal()) < 1e-10);
  }
}

TEST_CASE("matrix dump round trip") {
  const auto dir = testing::scratch_dir("dump");
  const ModelPtr m = make_model({8, 8, 1.0, Geometry::dirichlet}, FieldProfile::constant());
  const DenseMatrix d = assemble(m, 0.4).dense();
  write_matrix_dump((dir / "h.bin").string(), d);
  CHECK(testing::max_abs(read_matrix_dump((dir / "h.bin").string()) - d) == 0.0);
  CHECK(std::filesystem::file_size(dir / "h.bin") == 16 + 64 * 64 * 16);
  CHECK_THROWS(read_matrix_dump((dir / "missing.bin").string()));
}

TEST_CASE("torus rejects unquantized flux") {
  const ModelPtr m = make_model({8, 8, 1.0, Geometry::torus}, FieldProfile::constant());
  CHECK_THROWS_AS(assemble(m, 0.3), PreconditionError);
}

}
