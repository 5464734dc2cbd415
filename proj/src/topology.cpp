#include "magspec/topology.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lapack.hpp"
#include "magspec/error.hpp"

namespace magspec {

namespace {

constexpr double kPi = std::numbers::pi;

// ‖Σ_i c_i V_i V_i†‖ for orthonormal bases V_i, evaluated on their joint range.
double lowrank_combination_norm(const std::vector<std::pair<double, const DenseMatrix*>>& terms) {
  Eigen::Index n = 0, m = 0;
  for (const auto& [c, v] : terms) {
    n = v->rows();
    m += v->cols();
  }
  if (m == 0) return 0.0;
  DenseMatrix stacked(n, m);
  Eigen::Index col = 0;
  for (const auto& [c, v] : terms) {
    stacked.middleCols(col, v->cols()) = *v;
    col += v->cols();
  }
  Eigen::HouseholderQR<DenseMatrix> qr(stacked);
  const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(n, std::min(n, m));
  DenseMatrix small = DenseMatrix::Zero(q.cols(), q.cols());
  for (const auto& [c, v] : terms) {
    const DenseMatrix a = q.adjoint() * (*v);
    small += c * a * a.adjoint();
  }
  return hermitian_norm(0.5 * (small + small.adjoint()));
}

// Diagonal of P X1 P X2 P - P X2 P X1 P in matrix form.
Eigen::VectorXcd marker_density(const Projection& p, const Grid& grid) {
  const int n = grid.size();
  Eigen::VectorXd x1(n), x2(n);
  for (int i = 0; i < n; ++i) {
    const Point c = grid.coordinate(i);
    x1(i) = c.x1;
    x2(i) = c.x2;
  }
  if (p.low_rank()) {
    const DenseMatrix v = p.basis();
    const DenseMatrix xr = v.adjoint() * x1.asDiagonal() * v;
    const DenseMatrix yr = v.adjoint() * x2.asDiagonal() * v;
    const DenseMatrix comm = xr * yr - yr * xr;
    const DenseMatrix vc = v * comm;
    return vc.cwiseProduct(v.conjugate()).rowwise().sum();
  }
  const DenseMatrix pm = p.dense();
  const DenseMatrix a = (pm * x1.asDiagonal()) * pm;
  const DenseMatrix b = (pm * x2.asDiagonal()) * pm;
  Eigen::VectorXcd d(n);
  for (int i = 0; i < n; ++i) d(i) = a.row(i).dot(b.col(i).conjugate()) - b.row(i).dot(a.col(i).conjugate());
  return d;
}

}  // namespace

ChernReport chern_marker(const Projection& p, const Grid& grid, const std::vector<double>& half_widths) {
  if (grid.geometry() != Geometry::dirichlet)
    throw PreconditionError("marker_requires_dirichlet", "the local Chern marker is defined on Dirichlet boxes only");
  if (p.dim() != grid.size()) throw ConfigError("chern_marker: projection does not match the grid");
  if (half_widths.empty()) throw ConfigError("chern_marker: no windows given");
  const double half_box = 0.5 * std::min(grid.length1(), grid.length2());
  for (double l : half_widths)
    if (half_box - l < 0.2 * 2.0 * half_box - 1e-9) {
      std::ostringstream msg;
      msg << "window half-width " << l << " leaves less than 20% of the box as margin";
      throw PreconditionError("window_margin", msg.str());
    }
  const Eigen::VectorXcd density = marker_density(p, grid);
  ChernReport r;
  std::vector<double> inv_l;
  for (double l : half_widths) {
    const BulkWindow w = bulk_window(grid, l);
    cplx sum = 0.0;
    for (int i : w.sites) sum += density(i);
    const cplx c = cplx(0.0, 2.0 * kPi) * sum / w.area;
    r.half_widths.push_back(l);
    r.values.push_back(c.real());
    r.max_imaginary = std::max(r.max_imaginary, std::abs(c.imag()));
    inv_l.push_back(1.0 / l);
  }
  if (r.values.size() >= 2) {
    r.extrapolated = fit_line(inv_l, r.values).intercept;
  } else {
    r.extrapolated = r.values.front();
  }
  r.nearest_integer = static_cast<int>(std::lround(r.extrapolated));
  r.deviation = std::abs(r.extrapolated - r.nearest_integer);
  return r;
}

FhsReport fhs_chern_oracle(const ModelPtr& model, double b, int band_count, int mesh) {
  if (model->grid.geometry() != Geometry::torus)
    throw PreconditionError("fhs_requires_torus", "the twisted-boundary Chern oracle needs a torus");
  if (band_count < 1 || band_count >= model->grid.size()) throw ConfigError("fhs_chern_oracle: invalid band count");
  if (mesh < 2) throw ConfigError("fhs_chern_oracle: mesh must be at least 2");
  FhsReport r;
  r.mesh = mesh;
  r.band_count = band_count;
  r.min_gap = std::numeric_limits<double>::infinity();
  std::vector<DenseMatrix> frames(static_cast<std::size_t>(mesh) * mesh);
  for (int j2 = 0; j2 < mesh; ++j2)
    for (int j1 = 0; j1 < mesh; ++j1) {
      const Twist tw{2.0 * kPi * j1 / mesh, 2.0 * kPi * j2 / mesh};
      const EigenDecomposition eig = eigensolve_lowest(assemble(model, b, tw), band_count);
      r.min_gap = std::min(r.min_gap, eig.coverage - eig.values(band_count - 1));
      frames[static_cast<std::size_t>(j2) * mesh + j1] = eig.vectors;
    }
  if (!(r.min_gap > 1e-8)) throw PreconditionError("gap_closed", "selected bands touch the rest of the spectrum");
  auto frame = [&](int j1, int j2) -> const DenseMatrix& {
    return frames[static_cast<std::size_t>((j2 + mesh) % mesh) * mesh + (j1 + mesh) % mesh];
  };
  auto link = [&](const DenseMatrix& a, const DenseMatrix& c) {
    const cplx det = DenseMatrix(a.adjoint() * c).partialPivLu().determinant();
    if (std::abs(det) < 1e-12) throw NumericalError("fhs_chern_oracle: degenerate link variable; refine the mesh");
    return det / std::abs(det);
  };
  double total = 0.0;
  for (int j2 = 0; j2 < mesh; ++j2)
    for (int j1 = 0; j1 < mesh; ++j1) {
      const cplx u1 = link(frame(j1, j2), frame(j1 + 1, j2));
      const cplx u2 = link(frame(j1 + 1, j2), frame(j1 + 1, j2 + 1));
      const cplx u3 = link(frame(j1, j2 + 1), frame(j1 + 1, j2 + 1));
      const cplx u4 = link(frame(j1, j2), frame(j1, j2 + 1));
      total += std::arg(u1 * u2 * std::conj(u3) * std::conj(u4));
    }
  // Orientation fixed against the Streda response of the lowest Landau level (+1).
  r.raw = total / (2.0 * kPi);
  r.chern = static_cast<int>(std::lround(r.raw));
  return r;
}

IdsReport ids(const Projection& p, const Grid& grid, const std::vector<double>& half_widths) {
  if (p.dim() != grid.size()) throw ConfigError("ids: projection does not match the grid");
  const Eigen::VectorXd diag = p.diagonal();
  IdsReport r;
  for (double l : half_widths) {
    const BulkWindow w = bulk_window(grid, l);
    double trace = 0.0;
    for (int i : w.sites) trace += diag(i);
    r.half_widths.push_back(l);
    r.values.push_back(trace / w.area);
  }
  if (!r.values.empty()) {
    const auto largest = std::max_element(r.half_widths.begin(), r.half_widths.end()) - r.half_widths.begin();
    r.plateau = r.values[static_cast<std::size_t>(largest)];
  }
  return r;
}

IdsSweepReport ids_sweep(const ModelPtr& model, const std::vector<double>& fields, double a1, double a2) {
  if (!(a1 < a2)) throw ConfigError("ids_sweep: need a1 < a2");
  const Grid& grid = model->grid;
  const double half_box = 0.5 * std::min(grid.length1(), grid.length2());
  const double window = grid.geometry() == Geometry::torus ? half_box : 0.5 * half_box;
  IdsSweepReport r;
  std::vector<double> xs;
  for (double b : fields) {
    const EigenDecomposition eig = eigensolve_below(assemble(model, b), a2);
    const GapReport gap = gap_report(eig, 0.0, a1, a2);
    if (!gap.open) {
      std::ostringstream msg;
      msg << "gap (" << a1 << ", " << a2 << ") closed at b=" << b << "; dropped from the IDS fit";
      log_warning(msg.str());
      r.dropped.push_back(b);
      continue;
    }
    const Projection p = spectral_projection(eig, -std::numeric_limits<double>::infinity(), a1, grid.cell_area());
    r.fields.push_back(b);
    r.ranks.push_back(p.rank());
    r.densities.push_back(ids(p, grid, {window}).plateau);
    xs.push_back(b / (2.0 * kPi));
  }
  if (r.fields.size() < 2) throw PreconditionError("gap_closed", "fewer than two fields kept the gap open");
  const LinearFit fit = fit_line(xs, r.densities);
  r.slope = fit.slope;
  r.intercept = fit.intercept;
  r.slope_integer = static_cast<int>(std::lround(fit.slope));
  for (std::size_t i = 0; i < xs.size(); ++i)
    r.residual = std::max(r.residual, std::abs(r.densities[i] - fit.intercept - fit.slope * xs[i]));
  return r;
}

double projection_distance(const Projection& p1, const Projection& p2) {
  if (p1.dim() != p2.dim()) throw ConfigError("projection_distance: dimension mismatch");
  if (p1.low_rank() && p2.low_rank() && p1.rank() + p2.rank() <= p1.dim() / 2) {
    const DenseMatrix v1 = p1.basis();
    const DenseMatrix v2 = p2.basis();
    return lowrank_combination_norm({{1.0, &v1}, {-1.0, &v2}});
  }
  return operator_norm(DenseMatrix(p1.dense() - p2.dense()));
}

SweepResult local_trace_difference(const Projection& p1, const Projection& p2, const Grid& grid,
                                   const std::vector<double>& half_widths) {
  const double distance = projection_distance(p1, p2);
  if (distance >= 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "‖P1 - P2‖ = " << distance << " is not below 1";
    throw PreconditionError("projections_too_far", msg.str());
  }
  const Eigen::VectorXd diff = p1.diagonal() - p2.diagonal();
  SweepResult s;
  s.x_label = "L";
  s.y_label = "trace_difference";
  for (double l : half_widths) {
    const BulkWindow w = bulk_window(grid, l);
    double acc = 0.0;
    for (int i : w.sites) acc += diff(i);
    s.add(l, std::abs(acc));
  }
  s.refit();
  return s;
}

FermiProjection fermi_projection(const ModelPtr& model, double b, double energy) {
  const DiscreteHamiltonian h = assemble(model, b);
  const EigenDecomposition eig = eigensolve_below(h, energy);
  const double tol = 1e-9 * h.norm_bound();
  int rank = 0;
  while (rank < eig.count() && eig.values(rank) < energy) ++rank;
  const double above = rank < eig.count() ? eig.values(rank) : eig.coverage;
  if (above - energy < tol || (rank > 0 && energy - eig.values(rank - 1) < tol)) {
    std::ostringstream msg;
    msg << "Fermi energy " << energy << " coincides with an eigenvalue of H_b at b=" << b;
    throw PreconditionError("fermi_level_in_spectrum", msg.str());
  }
  FermiProjection out{Projection::from_basis(eig.vectors.leftCols(rank), model->grid.cell_area()), energy, rank, 0.0};
  out.gap_above = above - (rank > 0 ? eig.values(rank - 1) : energy);
  return out;
}

FermiProjection lowest_states(const ModelPtr& model, double b, int rank) {
  if (rank < 1) throw ConfigError("lowest_states: rank must be positive");
  const DiscreteHamiltonian h = assemble(model, b);
  const EigenDecomposition eig = eigensolve_lowest(h, rank);
  const double gap = eig.coverage - eig.values(rank - 1);
  if (gap < 1e-9 * h.norm_bound()) {
    std::ostringstream msg;
    msg << "rank " << rank << " splits a degenerate cluster of H_b at b=" << b;
    throw PreconditionError("rank_splits_cluster", msg.str());
  }
  const double energy = 0.5 * (eig.values(rank - 1) + eig.coverage);
  return {Projection::from_basis(eig.vectors.leftCols(rank), model->grid.cell_area()), energy, rank, gap};
}

DistanceTrend projection_distance_trend(const std::vector<ModelPtr>& models, double b0, double epsilon,
                                        double fermi_energy) {
  DistanceTrend t;
  for (const auto& m : models) {
    const FermiProjection p0 = fermi_projection(m, b0, fermi_energy);
    if (p0.rank == 0) throw PreconditionError("empty_projection", "no states below the Fermi energy");
    const DiscreteHamiltonian hb = assemble(m, b0 + epsilon);
    const EigenDecomposition below = eigensolve_below(hb, fermi_energy);
    int fermi_rank = 0;
    while (fermi_rank < below.count() && below.values(fermi_rank) < fermi_energy) ++fermi_rank;
    FermiProjection p1 = fermi_rank >= p0.rank && below.count() > p0.rank
                             ? FermiProjection{Projection::from_basis(below.vectors.leftCols(p0.rank),
                                                                      m->grid.cell_area()),
                                               fermi_energy, p0.rank,
                                               below.values(p0.rank) - below.values(p0.rank - 1)}
                             : lowest_states(m, b0 + epsilon, p0.rank);
    if (p1.gap_above < 1e-9 * hb.norm_bound())
      throw PreconditionError("rank_splits_cluster", "matched rank splits a degenerate cluster of H_b");
    t.box_sizes.push_back(m->grid.n1());
    t.distances.push_back(projection_distance(p1.projection, p0.projection));
    t.ranks.push_back(p0.rank);
    t.fermi_ranks_b.push_back(fermi_rank);
    t.rank_gaps.push_back(p1.gap_above);
  }
  return t;
}

Vector central_patch(const Grid& grid, int width) {
  Vector eta = Vector::Zero(grid.size());
  const int c1 = grid.n1() / 2, c2 = grid.n2() / 2;
  const int lo = -(width / 2), hi = lo + width - 1;
  for (int d2 = lo; d2 <= hi; ++d2)
    for (int d1 = lo; d1 <= hi; ++d1) eta(grid.index(c1 + d1, c2 + d2)) = 1.0;
  return eta.normalized();
}

SweepResult strong_continuity_probe(const ModelPtr& model, double b0, const std::vector<double>& epsilons,
                                    const Vector& eta_in, double fermi_energy) {
  if (eta_in.size() != model->grid.size()) throw ConfigError("strong_continuity_probe: η has the wrong length");
  const Vector eta = eta_in.normalized();
  const FermiProjection p0 = fermi_projection(model, b0, fermi_energy);
  const Vector p0eta = p0.projection.apply(eta);
  SweepResult s;
  s.x_label = "epsilon";
  s.y_label = "strong_difference";
  for (double eps : epsilons) {
    const FermiProjection pe = fermi_projection(model, b0 + eps, fermi_energy);
    s.add(std::abs(eps), (pe.projection.apply(eta) - p0eta).norm());
  }
  s.refit();
  return s;
}

DerivativeProbe norm_derivative_probe(const ModelPtr& model, double b0, const std::vector<double>& epsilons, double a1,
                                      double a2) {
  if (epsilons.empty()) throw ConfigError("norm_derivative_probe: no ε values");
  auto island = [&](double b) {
    const EigenDecomposition eig = eigensolve_below(assemble(model, b), a2);
    spectral_island(eig, a1, a2);
    return spectral_projection(eig, a1, a2, model->grid.cell_area()).basis();
  };
  double smallest = std::numeric_limits<double>::infinity();
  for (double e : epsilons) smallest = std::min(smallest, std::abs(e));
  if (!(smallest > 0)) throw ConfigError("norm_derivative_probe: ε values must be non-zero");
  // Step well below the sweep so the O(δ²) error of D stays under the O(ε³) odd remainder.
  const double delta = 0.1 * smallest;
  const DenseMatrix v0 = island(b0);
  const DenseMatrix vp = island(b0 + delta);
  const DenseMatrix vm = island(b0 - delta);
  if (vp.cols() != v0.cols() || vm.cols() != v0.cols())
    throw PreconditionError("rank_changed", "island rank changes within the probe range");
  DerivativeProbe out;
  out.distance.x_label = out.remainder.x_label = out.asymmetry.x_label = "epsilon";
  out.distance.y_label = "norm_difference";
  out.remainder.y_label = "derivative_remainder";
  out.asymmetry.y_label = "odd_remainder";
  for (double eps : epsilons) {
    const double a = std::abs(eps);
    const DenseMatrix ve = island(b0 + eps);
    const DenseMatrix vme = island(b0 - eps);
    const double scale = eps / (2.0 * delta);
    out.distance.add(a, lowrank_combination_norm({{1.0, &ve}, {-1.0, &v0}}));
    out.remainder.add(a, lowrank_combination_norm({{1.0, &ve}, {-1.0, &v0}, {-scale, &vp}, {scale, &vm}}));
    out.asymmetry.add(a, lowrank_combination_norm({{1.0, &ve}, {-1.0, &vme}, {-2.0 * scale, &vp}, {2.0 * scale, &vm}}));
  }
  out.distance.refit();
  out.remainder.refit();
  out.asymmetry.refit();
  return out;
}

}  // namespace magspec
