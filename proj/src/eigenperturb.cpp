#include "magspec/eigenperturb.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "lapack.hpp"
#include "magspec/error.hpp"
#include "magspec/gcmpt.hpp"

namespace magspec {

namespace {

// ‖A B†‖ for tall A, B with the same number of columns.
double outer_product_norm(const DenseMatrix& a, const DenseMatrix& b) {
  const Eigen::Index k = a.cols();
  Eigen::HouseholderQR<DenseMatrix> qa(a), qb(b);
  const DenseMatrix ra = qa.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const DenseMatrix rb = qb.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const DenseMatrix core = ra * rb.adjoint();
  return Eigen::JacobiSVD<DenseMatrix>(core).singularValues()(0);
}

DecayFit state_decay(const Grid& grid, const Vector& psi) {
  std::vector<double> d(static_cast<std::size_t>(grid.size())), m(d.size());
  for (int i = 0; i < grid.size(); ++i) {
    d[static_cast<std::size_t>(i)] = grid.coordinate(i).norm();
    m[static_cast<std::size_t>(i)] = std::abs(psi(i));
  }
  const double reach = 0.5 * std::min(grid.length1(), grid.length2());
  return fit_decay_samples(d, m, grid.h(), 2.0 * grid.h(), reach);
}

}  // namespace

EigenstateData isolated_eigenstate(const DiscreteHamiltonian& h, int index) {
  if (index < 0 || index + 1 >= h.dim()) throw ConfigError("isolated_eigenstate: index out of range");
  const EigenDecomposition eig = eigensolve_lowest(h, index + 2);
  const double scale = h.norm_bound();
  EigenstateData s;
  s.energy = eig.values(index);
  s.state = eig.vectors.col(index);
  const double tol = 1e-8 * scale;
  s.multiplicity = 0;
  s.gap = std::abs(eig.coverage - s.energy);
  for (int k = 0; k < eig.count(); ++k) {
    const double d = std::abs(eig.values(k) - s.energy);
    if (d <= tol) {
      ++s.multiplicity;
    } else {
      s.gap = std::min(s.gap, d);
    }
  }
  s.residual = (h.matrix() * s.state - s.energy * s.state).norm() / scale;
  // Diagnostic only: extended states (torus, degenerate levels) have no decay to fit.
  try {
    s.decay = state_decay(h.grid(), s.state);
  } catch (const NumericalError& e) {
    log_warning(std::string("eigenstate decay not fitted: ") + e.what());
  }
  return s;
}

ReducedResolvent reduced_resolvent(const DiscreteHamiltonian& h, const EigenDecomposition& eig, const Projection& p,
                                   double mu, double margin) {
  if (!eig.complete) throw ConfigError("reduced_resolvent: needs a complete eigendecomposition");
  if (p.dim() != eig.dim) throw ConfigError("reduced_resolvent: projection does not match the operator");
  const DenseMatrix basis = p.basis();
  const Eigen::VectorXd weight = (basis.adjoint() * eig.vectors).colwise().squaredNorm().transpose();
  std::vector<int> outside;
  for (int k = 0; k < eig.count(); ++k)
    if (weight(k) < 0.5) outside.push_back(k);
  if (static_cast<int>(outside.size()) != eig.count() - p.rank())
    throw PreconditionError("projection_not_spectral", "P is not spanned by eigenvectors of H");
  const int n = eig.dim;
  DenseMatrix v(n, static_cast<Eigen::Index>(outside.size()));
  Eigen::VectorXcd inv(v.cols());
  for (std::size_t c = 0; c < outside.size(); ++c) {
    const double gap = eig.values(outside[c]) - mu;
    if (std::abs(gap) < margin) {
      std::ostringstream msg;
      msg << "μ = " << mu << " lies within " << margin << " of the excluded eigenvalue " << eig.values(outside[c]);
      throw PreconditionError("mu_resonant", msg.str());
    }
    v.col(static_cast<Eigen::Index>(c)) = eig.vectors.col(outside[c]);
    inv(static_cast<Eigen::Index>(c)) = 1.0 / gap;
  }
  ReducedResolvent r;
  r.mu = mu;
  r.resolvent = {v * inv.asDiagonal() * v.adjoint(), p.cell_area()};
  const DenseMatrix complement = DenseMatrix::Identity(n, n) - p.dense();
  DenseMatrix shifted = h.dense();
  shifted.diagonal().array() -= mu;
  r.defect = operator_norm(DenseMatrix(complement * (shifted * r.resolvent.op) - complement));
  r.annihilation = operator_norm(DenseMatrix(r.resolvent.op * basis));
  return r;
}

FeshbachResult feshbach_iterate(const DiscreteHamiltonian& hb, const DiscreteHamiltonian& hb0,
                                const EigenstateData& state, double tol, int max_iter) {
  if (state.multiplicity != 1)
    throw PreconditionError("eigenvalue_not_simple", "the Feshbach reduction is implemented for simple eigenvalues only");
  const int n = hb.dim();
  const SparseMatrix w = perturbation_operator(hb, hb0);
  const Vector wpsi = w * state.state;
  const double diagonal = state.energy + state.state.dot(wpsi).real();

  // Householder reflector whose first column is ψ; the rest spans its complement.
  Eigen::HouseholderQR<DenseMatrix> qr(DenseMatrix(state.state));
  const auto reflector = qr.householderQ();
  DenseMatrix m = hb.dense();
  m.applyOnTheLeft(reflector.adjoint());
  m.applyOnTheRight(reflector);
  DenseMatrix restricted = m.bottomRightCorner(n - 1, n - 1);
  Eigen::VectorXd lambda;
  lapack::heev_full(restricted, lambda, true);
  Vector rotated = wpsi;
  rotated.applyOnTheLeft(reflector.adjoint());
  const Eigen::VectorXd weight = (restricted.adjoint() * rotated.tail(n - 1)).cwiseAbs2();

  FeshbachResult out;
  const double scale = hb.norm_bound();
  double mu = state.energy;
  for (int it = 1; it <= max_iter; ++it) {
    const double closest = (lambda.array() - mu).abs().minCoeff();
    if (closest <= 1e-12 * scale) {
      std::ostringstream msg;
      msg << "compressed operator minus μ = " << mu << " is singular (distance " << closest << ")";
      throw PreconditionError("restricted_operator_singular", msg.str());
    }
    const double next = diagonal - (weight.array() / (lambda.array() - mu)).sum();
    out.history.push_back(next);
    out.iterations = it;
    const double change = std::abs(next - mu);
    mu = next;
    if (change <= tol) {
      out.energy = mu;
      out.min_denominator = (lambda.array() - mu).abs().minCoeff();
      return out;
    }
  }
  std::ostringstream msg;
  msg << "Feshbach iteration did not reach tolerance " << tol << " in " << max_iter << " steps";
  throw NumericalError(msg.str());
}

double second_order_eigenvalue(const Vector& psi, double e0, const SparseMatrix& w, const ReducedResolvent& r0) {
  const Vector wpsi = w * psi;
  return e0 + psi.dot(wpsi).real() - wpsi.dot(r0.resolvent.op * wpsi).real();
}

ExpansionSweep expansion_order_sweep(const ModelPtr& model, double b0, const std::vector<double>& epsilons,
                                     int index) {
  if (epsilons.empty()) throw ConfigError("expansion_order_sweep: no ε values");
  const DiscreteHamiltonian hb0 = assemble(model, b0);
  const EigenDecomposition eig = eigensolve(hb0);
  const EigenstateData base = isolated_eigenstate(hb0, index);
  if (base.multiplicity != 1)
    throw PreconditionError("eigenvalue_not_simple", "the selected eigenvalue of H_b0 is degenerate");
  const Grid& grid = model->grid;
  const Projection p0 = Projection::from_basis(DenseMatrix(base.state), grid.cell_area());
  const ReducedResolvent r0 = reduced_resolvent(hb0, eig, p0, base.energy);

  ExpansionSweep out;
  out.second_order.x_label = out.first_order.x_label = out.eigenvalue_shift.x_label = "epsilon";
  out.projected_energy.x_label = "epsilon";
  out.second_order.y_label = "second_order_error";
  out.first_order.y_label = "first_order_error";
  out.eigenvalue_shift.y_label = "eigenvalue_shift";
  out.projected_energy.y_label = "projected_energy_difference";
  double largest = 0.0;
  Vector psi_largest;
  for (double eps : epsilons) {
    const DiscreteHamiltonian hb = assemble(model, b0 + eps);
    const EigenstateData st = isolated_eigenstate(hb, index);
    if (st.multiplicity != 1)
      throw PreconditionError("eigenvalue_not_simple", "the eigenvalue became degenerate along the sweep");
    const SparseMatrix w = perturbation_operator(hb, hb0);
    ExpansionRow row;
    row.epsilon = eps;
    row.exact = st.energy;
    row.first = base.energy + base.state.dot(w * base.state).real();
    row.second = second_order_eigenvalue(base.state, base.energy, w, r0);
    row.residual = std::abs(row.exact - row.second);
    out.rows.push_back(row);
    const double a = std::abs(eps);
    out.second_order.add(a, row.residual);
    out.first_order.add(a, std::abs(row.exact - row.first));
    out.eigenvalue_shift.add(a, std::abs(row.exact - base.energy));
    DenseMatrix left(grid.size(), 2), right(grid.size(), 2);
    left.col(0) = hb.matrix() * st.state;
    left.col(1) = -(hb.matrix() * base.state);
    right.col(0) = st.state;
    right.col(1) = base.state;
    out.projected_energy.add(a, outer_product_norm(left, right));
    if (a > largest) {
      largest = a;
      psi_largest = st.state;
    }
  }
  out.second_order.refit();
  out.first_order.refit();
  out.eigenvalue_shift.refit();
  out.projected_energy.refit();

  const KatoNagyResult kn = kato_nagy(Projection::from_basis(DenseMatrix(psi_largest), grid.cell_area()), p0);
  out.kato_nagy_unitarity = kn.unitarity_defect;
  out.kato_nagy_intertwining = kn.intertwining_defect;
  DenseMatrix shifted = kn.unitary.op;
  shifted.diagonal().array() -= 1.0;
  const BulkWindow window = bulk_window(grid, 0.5 * std::min(grid.length1(), grid.length2()));
  DecayFitOptions tail;
  tail.from_peak = true;
  out.kato_nagy_decay = fit_exponential_decay({shifted, grid.cell_area()}, grid, window, tail);
  return out;
}

}  // namespace magspec
