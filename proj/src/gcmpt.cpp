#include "magspec/gcmpt.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "blocks.hpp"
#include "lapack.hpp"
#include "magspec/error.hpp"

namespace magspec {

namespace {

constexpr Eigen::Index kDenseNenciuLimit = 1500;

DenseMatrix identity(Eigen::Index n) { return DenseMatrix::Identity(n, n); }

// Hermitian f(A) = W f(Λ) W† through a full eigendecomposition.
template <class F>
DenseMatrix hermitian_function(const DenseMatrix& a, F&& f) {
  DenseMatrix w = 0.5 * (a + a.adjoint());
  Eigen::VectorXd lambda;
  lapack::heev_full(w, lambda, true);
  Eigen::VectorXcd fl(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) fl(k) = f(lambda(k));
  return w * fl.asDiagonal() * w.adjoint();
}

// Eigenvectors of a Hermitian near-projection with eigenvalue above 1/2, by subspace
// iteration. The spectrum clusters near 0 and 1, so a few sweeps suffice.
DenseMatrix upper_cluster(const DenseMatrix& a) {
  const Eigen::Index n = a.rows();
  const int expected = static_cast<int>(std::lround(a.diagonal().real().sum()));
  const int block = std::min<int>(static_cast<int>(n), expected + std::max(10, expected / 5));
  std::mt19937_64 rng(11);
  DenseMatrix x = a * detail::random_block(static_cast<int>(n), block, rng);
  for (int it = 0; it < 200; ++it) {
    const DenseMatrix q = detail::orthonormalize(x);
    const DenseMatrix y = a * q;
    DenseMatrix g = q.adjoint() * y;
    g = 0.5 * (g + g.adjoint());
    Eigen::VectorXd theta;
    lapack::heev_full(g, theta, true);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      if (theta(k) > 0.5) keep.push_back(k);
    if (static_cast<int>(keep.size()) >= block) throw NumericalError("near-projection rank exceeds the search block");
    const DenseMatrix ritz = q * g;
    const DenseMatrix image = y * g;
    double worst = 0.0;
    for (Eigen::Index k : keep) worst = std::max(worst, (image.col(k) - theta(k) * ritz.col(k)).norm());
    if (worst <= 1e-12) {
      DenseMatrix basis(n, static_cast<Eigen::Index>(keep.size()));
      for (std::size_t c = 0; c < keep.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = ritz.col(keep[c]);
      return basis;
    }
    x = image;
  }
  throw NumericalError("subspace iteration for the Nenciu projection did not converge");
}

}  // namespace

DenseMatrix dressing_phases(const Grid& grid, const FieldProfile& profile, double epsilon, int quad_order) {
  const int n = grid.size();
  DenseMatrix e(n, n);
  for (int j = 0; j < n; ++j) {
    const Point y = grid.coordinate(j);
    e(j, j) = 1.0;
    for (int i = j + 1; i < n; ++i) {
      const cplx phase = std::polar(1.0, epsilon * peierls_phase(profile, grid.coordinate(i), y, quad_order));
      e(i, j) = phase;
      e(j, i) = std::conj(phase);
    }
  }
  return e;
}

KernelOperator dress_kernel(const KernelOperator& k, const Grid& grid, const FieldProfile& profile, double epsilon,
                            int quad_order) {
  if (k.dim() != grid.size()) throw ConfigError("dress_kernel: kernel does not match the grid");
  if (epsilon == 0.0) return k;
  return {k.op.cwiseProduct(dressing_phases(grid, profile, epsilon, quad_order)), k.cell_area};
}

KernelOperator quasi_inverse_S(const EigenDecomposition& eig_b0, const Model& model, cplx z, double epsilon) {
  const KernelOperator r = resolvent(eig_b0, z, model.grid.cell_area());
  return dress_kernel(r, model.grid, model.profile, epsilon, model.quad_order);
}

KernelOperator quasi_inverse_S(const DiscreteHamiltonian& hb0, cplx z, double epsilon) {
  return quasi_inverse_S(eigensolve(hb0), *hb0.model(), z, epsilon);
}

KernelOperator defect_T(const DiscreteHamiltonian& hb, const KernelOperator& s, cplx z) {
  if (s.dim() != hb.dim()) throw ConfigError("defect_T: dimension mismatch");
  DenseMatrix t = hb.matrix() * s.op;
  t -= z * s.op;
  t -= identity(s.dim());
  return {std::move(t), s.cell_area};
}

MptResolvent mpt_resolvent(const DiscreteHamiltonian& hb, const KernelOperator& s, cplx z, int order) {
  if (order < 0) throw ConfigError("mpt_resolvent: order must be non-negative");
  const KernelOperator t = defect_T(hb, s, z);
  MptResolvent out;
  out.t_norm = operator_norm(t.op);
  out.s_norm = operator_norm(s.op);
  if (out.t_norm >= 1.0) {
    std::ostringstream msg;
    msg << "‖T‖ = " << out.t_norm << " ≥ 1: the magnetic perturbation series does not converge";
    throw PreconditionError("defect_norm_too_large", msg.str());
  }
  DenseMatrix acc = identity(s.dim());
  for (int k = 0; k < order; ++k) acc = identity(s.dim()) - t.op * acc;
  out.approximation = {s.op * acc, s.cell_area};
  out.bound = std::pow(out.t_norm, order + 1) * out.s_norm / (1.0 - out.t_norm);
  return out;
}

KernelOperator tilde_projection(const Projection& p_b0, const Grid& grid, const FieldProfile& profile, double epsilon,
                                int quad_order) {
  return dress_kernel(p_b0.kernel(), grid, profile, epsilon, quad_order);
}

KernelOperator delta_defect(const KernelOperator& ptilde) {
  return {ptilde.op * ptilde.op - ptilde.op, ptilde.cell_area};
}

KernelOperator delta_first_order(const Projection& p_b0, const Grid& grid, const FieldProfile& profile,
                                 double epsilon, int quad_order) {
  const DenseMatrix p = p_b0.dense();
  const int n = grid.size();
  DenseMatrix phi(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      phi(i, j) = i == j ? 0.0 : peierls_phase(profile, grid.coordinate(i), grid.coordinate(j), quad_order);
  const DenseMatrix phi_p = phi.cwiseProduct(p);
  DenseMatrix sum = phi_p * p + p * phi_p - phi.cwiseProduct(p * p);
  const DenseMatrix e = dressing_phases(grid, profile, epsilon, quad_order);
  return {cplx(0.0, epsilon) * e.cwiseProduct(sum), p_b0.cell_area()};
}

NenciuResult nenciu_projection(const KernelOperator& ptilde) {
  const Eigen::Index n = ptilde.dim();
  const DenseMatrix delta = delta_defect(ptilde).op;
  const double dnorm = operator_norm(delta);
  if (dnorm >= 0.25) {
    std::ostringstream msg;
    msg << "‖Δ‖ = " << dnorm << " ≥ 1/4: P̃ is too far from a projection";
    throw PreconditionError("delta_norm_too_large", msg.str());
  }
  const DenseMatrix correction = hermitian_function(identity(n) + 4.0 * delta, [](double mu) {
    return 1.0 / std::sqrt(mu) - 1.0;
  });
  DenseMatrix proj = ptilde.op + (ptilde.op - 0.5 * identity(n)) * correction;
  NenciuResult out{Projection::from_dense(proj, ptilde.cell_area), dnorm, 0.0, 0.0};
  const auto cert = out.projection.certify();
  out.idempotency = cert.idempotency;
  out.self_adjointness = cert.self_adjointness;
  return out;
}

NenciuResult nenciu_projection_spectral(const KernelOperator& ptilde) {
  const DenseMatrix& p = ptilde.op;
  const double dnorm = operator_norm(
      ptilde.dim(), [&](const Vector& v) -> Vector { const Vector pv = p * v; return p * pv - pv; },
      [&](const Vector& v) -> Vector { const Vector pv = p.adjoint() * v; return p.adjoint() * pv - pv; });
  if (dnorm >= 0.25) {
    std::ostringstream msg;
    msg << "‖Δ‖ = " << dnorm << " ≥ 1/4: P̃ is too far from a projection";
    throw PreconditionError("delta_norm_too_large", msg.str());
  }
  const DenseMatrix herm = 0.5 * (p + p.adjoint());
  DenseMatrix vectors;
  if (ptilde.dim() <= kDenseNenciuLimit) {
    Eigen::VectorXd values;
    lapack::heev_value_range(herm, 0.5, 2.0, values, &vectors);
  } else {
    vectors = upper_cluster(herm);
  }
  NenciuResult out{Projection::from_basis(std::move(vectors), ptilde.cell_area), dnorm, 0.0, 0.0};
  out.idempotency = out.projection.certify().idempotency;
  return out;
}

KatoNagyResult kato_nagy(const Projection& p1, const Projection& p2) {
  if (p1.dim() != p2.dim()) throw ConfigError("kato_nagy: dimension mismatch");
  const DenseMatrix a = p1.dense();
  const DenseMatrix b = p2.dense();
  const Eigen::Index n = a.rows();
  const DenseMatrix diff = a - b;
  KatoNagyResult out;
  out.distance = operator_norm(diff);
  if (out.distance >= 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "‖P1 - P2‖ = " << out.distance << ": projections are not close enough to intertwine";
    throw PreconditionError("projections_too_far", msg.str());
  }
  const DenseMatrix inv_sqrt =
      hermitian_function(identity(n) - diff * diff, [](double mu) { return 1.0 / std::sqrt(mu); });
  const DenseMatrix ab = a * b;
  const DenseMatrix mix = 2.0 * ab - a - b + identity(n);  // P1 P2 + (1 - P1)(1 - P2)
  DenseMatrix u = inv_sqrt * mix;
  out.unitarity_defect = operator_norm(DenseMatrix(u.adjoint() * u - identity(n)));
  out.intertwining_defect = operator_norm(DenseMatrix(a * u - u * b));
  out.unitary = {std::move(u), p1.cell_area()};
  return out;
}

PowerSeriesResult kernel_power_series(const std::vector<double>& coefficients, double radius, const KernelOperator& d) {
  PowerSeriesResult out;
  out.argument_norm = operator_norm(d.op);
  if (out.argument_norm >= radius) {
    std::ostringstream msg;
    msg << "‖D‖ = " << out.argument_norm << " is not inside the radius of convergence " << radius;
    throw PreconditionError("outside_radius_of_convergence", msg.str());
  }
  const Eigen::Index n = d.dim();
  DenseMatrix sum = DenseMatrix::Zero(n, n);
  DenseMatrix power = identity(n);
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    if (k > 0) power = power * d.op;
    const double term = std::abs(coefficients[k]) * power.norm();
    if (coefficients[k] != 0.0) sum += coefficients[k] * power;
    out.terms = static_cast<int>(k + 1);
    if (k > 0 && term < 1e-14) {
      out.value = {std::move(sum), d.cell_area};
      return out;
    }
  }
  throw NumericalError("kernel_power_series: coefficient list exhausted before the terms fell below 1e-14");
}

std::vector<double> inverse_sqrt_coefficients(int terms) {
  std::vector<double> a(terms, 0.0);
  double c = 1.0;  // (-1)^k binom(2k, k)
  for (int k = 1; k < terms; ++k) {
    c *= -2.0 * (2.0 * k - 1.0) / k;
    a[k] = c;
  }
  return a;
}

}  // namespace magspec
