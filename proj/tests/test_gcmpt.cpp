#include <cmath>

#include "doctest.h"
#include "magspec/error.hpp"
#include "magspec/gcmpt.hpp"
#include "support.hpp"

using namespace magspec;

namespace {

struct Fixture {
  ModelPtr model = make_model({12, 12, 0.5, Geometry::dirichlet}, FieldProfile::constant(), harmonic_well(1.0, 2.5));
  double b0 = 1.0;
  DiscreteHamiltonian h0 = assemble(model, b0);
  EigenDecomposition eig = eigensolve(h0);
  Projection p0 = spectral_projection(eig, 0.0, 0.5 * (eig.values(0) + eig.values(1)), 0.25);
};

}  // namespace

TEST_SUITE("gcmpt") {

TEST_CASE("inverse square root coefficients") {
  const auto c = inverse_sqrt_coefficients(6);
  REQUIRE(c.size() >= 5);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(-2));
  CHECK(c[2] == doctest::Approx(6));
  CHECK(c[3] == doctest::Approx(-20));
  CHECK(c[4] == doctest::Approx(70));
}

TEST_CASE("power series respects its radius") {
  const KernelOperator small(DenseMatrix::Identity(3, 3) * 0.01, 1.0);
  const PowerSeriesResult r = kernel_power_series(inverse_sqrt_coefficients(60), 0.25, small);
  CHECK(std::abs(r.value.op(0, 0) - (1 / std::sqrt(1.04) - 1)) < 1e-13);
  const KernelOperator big(DenseMatrix::Identity(3, 3) * 0.3, 1.0);
  CHECK_THROWS_AS(kernel_power_series(inverse_sqrt_coefficients(60), 0.25, big), PreconditionError);
}

TEST_CASE("dressing at zero is the identity") {
  Fixture f;
  const DenseMatrix ph = dressing_phases(f.model->grid, f.model->profile, 0.0);
  CHECK(testing::max_abs(ph - DenseMatrix::Ones(ph.rows(), ph.cols())) == 0.0);
  const KernelOperator s = quasi_inverse_S(f.h0, cplx(1.0, 0.5), 0.0);
  CHECK(testing::max_abs(defect_T(f.h0, s, cplx(1.0, 0.5)).op) < 1e-11);
}

TEST_CASE("defect scales linearly") {
  Fixture f;
  const cplx z{1.5, 0.4};
  std::vector<double> eps{0.01, 0.02, 0.04, 0.08}, norms;
  for (double e : eps) {
    const DiscreteHamiltonian hb = assemble(f.model, f.b0 + e);
    norms.push_back(operator_norm(defect_T(hb, quasi_inverse_S(f.eig, *f.model, z, e), z).op));
  }
  const LinearFit fit = fit_power_law(eps, norms);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("Neumann series reproduces the resolvent") {
  Fixture f;
  const cplx z{1.5, 0.4};
  const double eps = 0.02;
  const DiscreteHamiltonian hb = assemble(f.model, f.b0 + eps);
  const KernelOperator s = quasi_inverse_S(f.eig, *f.model, z, eps);
  const MptResolvent m = mpt_resolvent(hb, s, z, 12);
  CHECK(m.t_norm < 1);
  const DenseMatrix exact = resolvent(hb, z).op;
  CHECK(operator_norm(m.approximation.op - exact) <= m.bound + 1e-12);
  CHECK(operator_norm(m.approximation.op - exact) < 1e-8);
}

TEST_CASE("projection chain") {
  Fixture f;
  const double eps = 0.05;
  const KernelOperator pt = tilde_projection(f.p0, f.model->grid, f.model->profile, eps);
  const KernelOperator delta = delta_defect(pt);
  const KernelOperator first = delta_first_order(f.p0, f.model->grid, f.model->profile, eps);
  const double dn = operator_norm(delta.op);
  CHECK(dn < 0.25);
  // First-order flux term carries Δ up to O(ε²).
  CHECK(operator_norm(delta.op - first.op) < 0.2 * dn);

  const NenciuResult n = nenciu_projection(pt);
  CHECK(n.idempotency < 1e-10);
  CHECK(n.self_adjointness < 1e-10);
  CHECK(n.projection.rank() == 1);
  const NenciuResult ns = nenciu_projection_spectral(pt);
  CHECK(testing::max_abs(n.projection.dense() - ns.projection.dense()) < 1e-10);

  const EigenDecomposition eb = eigensolve(assemble(f.model, f.b0 + eps));
  const Projection pb = spectral_projection(eb, 0.0, 0.5 * (eb.values(0) + eb.values(1)), 0.25);
  const KatoNagyResult kn = kato_nagy(pb, n.projection);
  CHECK(kn.distance < 1);
  CHECK(kn.unitarity_defect < 1e-10);
  CHECK(kn.intertwining_defect < 1e-10);
}

TEST_CASE("Nenciu fixes exact projections") {
  Fixture f;
  const NenciuResult n = nenciu_projection(f.p0.kernel());
  CHECK(n.delta_norm < 1e-12);
  CHECK(testing::max_abs(n.projection.dense() - f.p0.dense()) < 1e-12);
  const KatoNagyResult kn = kato_nagy(f.p0, f.p0);
  CHECK(kn.distance < 1e-12);
  CHECK(testing::max_abs(kn.unitary.op - DenseMatrix::Identity(f.p0.dim(), f.p0.dim())) < 1e-12);
}

TEST_CASE("Nenciu refuses a large defect") {
  const KernelOperator half(DenseMatrix::Identity(4, 4) * 0.5, 1.0);
  CHECK_THROWS_AS(nenciu_projection(half), PreconditionError);
}

TEST_CASE("Kato-Nagy property on random rank-one pairs") {
  testing::Gen gen(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(3, 12);
    Vector u(n);
    for (int i = 0; i < n; ++i) u(i) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
    Vector v = u;
    for (int i = 0; i < n; ++i) v(i) += cplx(gen.uniform(-0.2, 0.2), gen.uniform(-0.2, 0.2));
    u.normalize();
    v.normalize();
    const Projection p1 = Projection::from_basis(u, 1.0), p2 = Projection::from_basis(v, 1.0);
    const KatoNagyResult kn = kato_nagy(p1, p2);
    CHECK(kn.unitarity_defect < 1e-10);
    CHECK(kn.intertwining_defect < 1e-10);
  }
}

}
