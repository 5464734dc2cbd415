#include "magspec/spectral.hpp"

#include <Eigen/QR>
#include <Eigen/CholmodSupport>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "blocks.hpp"
#include "lapack.hpp"
#include "magspec/error.hpp"

namespace magspec {

namespace {

constexpr double kPi = std::numbers::pi;

using detail::householder_orthonormalize;
using detail::orthonormalize;
using detail::random_block;

double orthonormality_defect(const DenseMatrix& v) {
  if (v.cols() == 0) return 0.0;
  if (v.rows() <= 2048 || v.cols() <= 256)
    return (v.adjoint() * v - DenseMatrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
  // Large full bases: check a deterministic sample of columns.
  const int samples = 64;
  DenseMatrix cols(v.rows(), samples);
  std::vector<int> picked(samples);
  for (int s = 0; s < samples; ++s) {
    picked[s] = static_cast<int>((static_cast<long long>(s) * 2654435761LL) % v.cols());
    cols.col(s) = v.col(picked[s]);
  }
  DenseMatrix g = v.adjoint() * cols;
  for (int s = 0; s < samples; ++s) g(picked[s], s) -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

double max_residual(const SparseMatrix& h, const DenseMatrix& v, const Eigen::VectorXd& values) {
  if (v.cols() == 0) return 0.0;
  DenseMatrix r = h * v;
  r -= v * values.asDiagonal();
  return r.colwise().norm().maxCoeff();
}

double gershgorin_lower(const SparseMatrix& h) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(h.rows());
  Eigen::VectorXd off = Eigen::VectorXd::Zero(h.rows());
  for (int k = 0; k < h.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
      if (it.row() == it.col())
        diag(it.row()) += it.value().real();
      else
        off(it.row()) += std::abs(it.value());
    }
  return (diag - off).minCoeff();
}

EigenDecomposition slice(const EigenDecomposition& full, int keep, double coverage) {
  EigenDecomposition out;
  out.dim = full.dim;
  out.complete = keep == full.count();
  out.values = full.values.head(keep);
  out.vectors = full.vectors.leftCols(keep);
  out.coverage = coverage;
  out.max_residual = full.max_residual;
  return out;
}

// Block shift-and-invert subspace iteration with Rayleigh-Ritz, for sparse H.
// Exactly one of `count` (> 0) and `upper` (finite) selects the wanted pairs.
EigenDecomposition subspace_iteration(const DiscreteHamiltonian& hm, int count, double upper,
                                      const PartialSolveOptions& opts) {
  const SparseMatrix& h = hm.matrix();
  const int n = hm.dim();
  const double norm = hm.norm_bound();
  const double sigma = gershgorin_lower(h) - 1e-3 * norm;
  SparseMatrix shifted = h;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
  Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt(shifted);
  if (llt.info() != Eigen::Success) throw NumericalError("sparse Cholesky factorization failed");

  std::mt19937_64 rng(opts.seed);
  const bool by_count = count > 0;
  auto block_for = [](int wanted) { return wanted + 1 + std::max(16, wanted / 2); };
  int p = std::min(n, by_count ? block_for(count) : 64);
  DenseMatrix x = random_block(n, p, rng);
  const double tol = opts.tol * norm;
  for (int it = 0; it < opts.max_iter; ++it) {
    DenseMatrix y = x;
    for (int k = 0; k < 3; ++k) y = llt.solve(y);
    const DenseMatrix q = orthonormalize(y);
    const DenseMatrix hq = h * q;
    DenseMatrix g = q.adjoint() * hq;
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::VectorXd theta;
    lapack::heev_full(g, theta, true);
    x = q * g;
    const DenseMatrix hx = hq * g;
    const int wanted =
        by_count ? count : static_cast<int>(std::count_if(theta.data(), theta.data() + p, [&](double t) { return t < upper; }));
    if (!by_count && p < n && block_for(wanted) > p) {
      const int grown = std::min(n, block_for(wanted) + wanted / 2);
      DenseMatrix bigger(n, grown);
      bigger << x, random_block(n, grown - p, rng);
      x = std::move(bigger);
      p = grown;
      continue;
    }
    const int needed = std::min(p, wanted + 1);
    double worst = 0.0;
    for (int j = 0; j < needed; ++j) worst = std::max(worst, (hx.col(j) - theta(j) * x.col(j)).norm());
    if (worst <= tol) {
      EigenDecomposition out;
      out.dim = n;
      const int keep = by_count ? std::min(count, p) : needed;
      out.values = theta.head(keep);
      out.vectors = x.leftCols(keep);
      out.coverage = needed > wanted ? theta(wanted) : std::numeric_limits<double>::infinity();
      out.complete = keep == n;
      out.max_residual = worst;
      return out;
    }
  }
  throw NumericalError("subspace iteration did not converge");
}

}  // namespace

EigenDecomposition eigensolve(const DenseMatrix& hermitian) {
  if (hermitian.rows() != hermitian.cols()) throw ConfigError("eigensolve: matrix is not square");
  EigenDecomposition out;
  out.dim = static_cast<int>(hermitian.rows());
  out.vectors = hermitian;
  lapack::heev_full(out.vectors, out.values, true);
  out.complete = true;
  return out;
}

EigenDecomposition eigensolve(const DiscreteHamiltonian& h) {
  EigenDecomposition out = eigensolve(h.dense());
  const double norm = h.norm_bound();
  out.max_residual = max_residual(h.matrix(), out.vectors, out.values);
  if (out.max_residual > 1e-9 * norm)
    throw NumericalError("eigensolve: residual " + std::to_string(out.max_residual) + " above tolerance");
  const double ortho = orthonormality_defect(out.vectors);
  if (ortho > 1e-10) throw NumericalError("eigensolve: eigenvectors not orthonormal (" + std::to_string(ortho) + ")");
  return out;
}

EigenDecomposition eigensolve_lowest(const DiscreteHamiltonian& h, int count, const PartialSolveOptions& opts) {
  if (count < 1) throw ConfigError("eigensolve_lowest: count must be positive");
  const int n = h.dim();
  if (count > n) throw ConfigError("eigensolve_lowest: more eigenpairs requested than the dimension");
  if (n <= opts.dense_threshold) {
    const EigenDecomposition full = eigensolve(h);
    return slice(full, count, count < n ? full.values(count) : std::numeric_limits<double>::infinity());
  }
  return subspace_iteration(h, count, 0.0, opts);
}

EigenDecomposition eigensolve_below(const DiscreteHamiltonian& h, double upper, const PartialSolveOptions& opts) {
  const int n = h.dim();
  if (n <= opts.dense_threshold) {
    const EigenDecomposition full = eigensolve(h);
    int keep = 0;
    while (keep < n && full.values(keep) < upper) ++keep;
    const double coverage = keep < n ? full.values(keep) : std::numeric_limits<double>::infinity();
    return slice(full, std::min(n, keep + 1), coverage);
  }
  return subspace_iteration(h, 0, upper, opts);
}

// ---------------------------------------------------------------- Projection

Projection Projection::from_basis(DenseMatrix basis, double cell_area) {
  const double defect = orthonormality_defect(basis);
  if (defect > 1e-9) throw NumericalError("projection basis is not orthonormal (" + std::to_string(defect) + ")");
  Projection p;
  p.rank_ = static_cast<int>(basis.cols());
  p.data_ = std::move(basis);
  p.is_basis_ = true;
  p.cell_area_ = cell_area;
  return p;
}

Projection Projection::from_dense(DenseMatrix op, double cell_area, double tol) {
  if (op.rows() != op.cols()) throw ConfigError("projection matrix is not square");
  Projection p;
  p.data_ = std::move(op);
  p.is_basis_ = false;
  p.cell_area_ = cell_area;
  p.rank_ = static_cast<int>(std::lround(p.data_.trace().real()));
  const Certificate c = p.certify();
  if (c.self_adjointness > tol || c.idempotency > tol || c.trace_minus_rank > 1e-6) {
    std::ostringstream msg;
    msg << "matrix is not an orthogonal projection: idempotency " << c.idempotency << ", self-adjointness "
        << c.self_adjointness << ", trace defect " << c.trace_minus_rank;
    throw NumericalError(msg.str());
  }
  return p;
}

int Projection::dim() const { return static_cast<int>(data_.rows()); }

DenseMatrix Projection::basis() const {
  if (is_basis_) return data_;
  DenseMatrix herm = 0.5 * (data_ + data_.adjoint());
  Eigen::VectorXd w;
  lapack::heev_full(herm, w, true);
  int first = 0;
  while (first < w.size() && w(first) < 0.5) ++first;
  return herm.rightCols(w.size() - first);
}

DenseMatrix Projection::dense() const {
  if (is_basis_) return data_ * data_.adjoint();
  return data_;
}

Eigen::VectorXd Projection::diagonal() const {
  if (is_basis_) return data_.rowwise().squaredNorm();
  return data_.diagonal().real();
}

Vector Projection::apply(const Vector& v) const {
  if (is_basis_) return data_ * (data_.adjoint() * v);
  return data_ * v;
}

Projection::Certificate Projection::certify() const {
  Certificate c;
  if (is_basis_) {
    c.idempotency = orthonormality_defect(data_);
    c.trace_minus_rank = std::abs(data_.squaredNorm() - rank_);
    return c;
  }
  c.self_adjointness = (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
  c.trace_minus_rank = std::abs(data_.trace().real() - rank_);
  if (data_.rows() <= 2048) {
    c.idempotency = operator_norm(DenseMatrix(data_ * data_ - data_));
  } else {
    std::mt19937_64 rng(11);
    const DenseMatrix probes = random_block(static_cast<int>(data_.rows()), 4, rng);
    const DenseMatrix once = data_ * probes;
    const DenseMatrix twice = data_ * once;
    c.idempotency = ((twice - once).colwise().norm().array() / probes.colwise().norm().array()).maxCoeff();
  }
  return c;
}

Projection spectral_projection(const EigenDecomposition& eig, double lower, double upper, double cell_area) {
  if (!eig.complete && !(upper < eig.coverage))
    throw ConfigError("spectral_projection: decomposition does not cover the requested window");
  std::vector<int> idx;
  for (int k = 0; k < eig.count(); ++k)
    if (eig.values(k) > lower && eig.values(k) < upper) idx.push_back(k);
  DenseMatrix basis(eig.vectors.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = eig.vectors.col(idx[c]);
  return Projection::from_basis(std::move(basis), cell_area);
}

// ---------------------------------------------------------------- resolvents

KernelOperator resolvent(const EigenDecomposition& eig, cplx z, double cell_area, double min_distance) {
  if (!eig.complete) throw ConfigError("resolvent needs a complete eigendecomposition");
  Eigen::VectorXcd inv(eig.count());
  for (int k = 0; k < eig.count(); ++k) {
    const cplx d = eig.values(k) - z;
    if (std::abs(d) < min_distance) {
      std::ostringstream msg;
      msg << "z = " << z << " lies within " << min_distance << " of the eigenvalue " << eig.values(k);
      throw PreconditionError("z_in_spectrum", msg.str());
    }
    inv(k) = 1.0 / d;
  }
  return {eig.vectors * inv.asDiagonal() * eig.vectors.adjoint(), cell_area};
}

KernelOperator resolvent(const DiscreteHamiltonian& h, cplx z) {
  const EigenDecomposition eig = eigensolve(h);
  KernelOperator r = resolvent(eig, z, h.grid().cell_area());
  std::mt19937_64 rng(3);
  const DenseMatrix probes = random_block(h.dim(), 2, rng);
  const DenseMatrix applied = h.matrix() * (r.op * probes) - z * (r.op * probes);
  const double residual = ((applied - probes).colwise().norm().array() / probes.colwise().norm().array()).maxCoeff();
  if (residual > 1e-9) throw NumericalError("resolvent residual " + std::to_string(residual) + " above tolerance");
  return r;
}

cplx Contour::node(int q) const { return center + radius * std::polar(1.0, 2.0 * kPi * q / nodes); }

cplx Contour::weight(int q) const { return -radius * std::polar(1.0, 2.0 * kPi * q / nodes) / static_cast<double>(nodes); }

Contour island_contour(double s_minus, double s_plus, double gap_below, double gap_above, double margin_fraction,
                       int nodes) {
  if (!(gap_below > 0) || !(gap_above > 0)) throw PreconditionError("island_not_isolated", "island has no spectral gap");
  const double below = std::isfinite(gap_below) ? gap_below : gap_above;
  const double above = std::isfinite(gap_above) ? gap_above : gap_below;
  if (!std::isfinite(below)) throw PreconditionError("island_not_isolated", "island is the whole spectrum");
  const double left = s_minus - 0.5 * below;
  const double right = s_plus + 0.5 * above;
  if (!(margin_fraction > 0) || margin_fraction > 0.5) throw ConfigError("contour margin fraction must lie in (0, 0.5]");
  // Crossing the real axis at mid-gap keeps the contour at least margin_fraction * gap from the spectrum.
  return Contour{0.5 * (left + right), 0.5 * (right - left), nodes};
}

RieszResult riesz_projection(const EigenDecomposition& eig, const Contour& contour, double cell_area) {
  if (contour.nodes < 4) throw ConfigError("contour needs at least 4 nodes");
  const double right = contour.center + contour.radius;
  if (!eig.complete && !(right < eig.coverage))
    throw ConfigError("riesz_projection: decomposition does not cover the contour");
  auto filter = [&](double lambda) {
    cplx acc = 0.0;
    for (int q = 0; q < contour.nodes; ++q) acc += contour.weight(q) / (lambda - contour.node(q));
    return acc;
  };
  double margin = std::numeric_limits<double>::infinity();
  double mismatch = 0.0;
  std::vector<int> inside;
  for (int k = 0; k < eig.count(); ++k) {
    const double lambda = eig.values(k);
    const double r = std::abs(lambda - contour.center);
    margin = std::min(margin, std::abs(r - contour.radius));
    const bool in = r < contour.radius;
    if (in) inside.push_back(k);
    mismatch = std::max(mismatch, std::abs(filter(lambda) - (in ? 1.0 : 0.0)));
  }
  if (!eig.complete && std::isfinite(eig.coverage)) {
    mismatch = std::max(mismatch, std::abs(filter(eig.coverage)));
    margin = std::min(margin, eig.coverage - right);
  }
  if (margin <= 1e-12) throw PreconditionError("contour_hits_spectrum", "contour passes through the spectrum");
  if (mismatch > 1e-6) {
    std::ostringstream msg;
    msg << "Riesz quadrature disagrees with the eigenvector sum by " << mismatch;
    throw NumericalError(msg.str());
  }
  DenseMatrix basis(eig.vectors.rows(), static_cast<Eigen::Index>(inside.size()));
  for (std::size_t c = 0; c < inside.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = eig.vectors.col(inside[c]);
  return {Projection::from_basis(std::move(basis), cell_area), mismatch, margin};
}

DenseMatrix riesz_quadrature_dense(const EigenDecomposition& eig, const Contour& contour) {
  if (!eig.complete) throw ConfigError("riesz_quadrature_dense needs a complete eigendecomposition");
  DenseMatrix acc = DenseMatrix::Zero(eig.dim, eig.dim);
  for (int q = 0; q < contour.nodes; ++q) acc += contour.weight(q) * resolvent(eig, contour.node(q), 1.0).op;
  return acc;
}

// ---------------------------------------------------------------- islands and gaps

SpectralIsland spectral_island(const EigenDecomposition& eig, double a1, double a2, double min_margin) {
  if (!(a1 < a2)) throw ConfigError("spectral_island: need a1 < a2");
  if (!eig.complete && !(a2 < eig.coverage))
    throw ConfigError("spectral_island: decomposition does not cover the window");
  SpectralIsland island;
  island.a1 = a1;
  island.a2 = a2;
  double below = -std::numeric_limits<double>::infinity();
  double above = std::numeric_limits<double>::infinity();
  for (int k = 0; k < eig.count(); ++k) {
    const double lambda = eig.values(k);
    for (double a : {a1, a2})
      if (std::abs(lambda - a) < min_margin) {
        std::ostringstream msg;
        msg << "island endpoint " << a << " is within " << min_margin << " of the eigenvalue " << lambda;
        throw PreconditionError("island_endpoint_in_spectrum", msg.str());
      }
    if (lambda > a1 && lambda < a2)
      island.eigenvalues.push_back(lambda);
    else if (lambda <= a1)
      below = std::max(below, lambda);
    else
      above = std::min(above, lambda);
  }
  if (!eig.complete) above = std::min(above, eig.coverage);
  if (!island.empty()) {
    island.s_minus = island.eigenvalues.front();
    island.s_plus = island.eigenvalues.back();
    island.gap_below = island.s_minus - below;
    island.gap_above = above - island.s_plus;
  }
  return island;
}

GapReport gap_report(const EigenDecomposition& eig, double epsilon, double k1, double k2) {
  GapReport r;
  r.epsilon = epsilon;
  r.margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < eig.count(); ++k) {
    const double lambda = eig.values(k);
    const double signed_distance =
        lambda < k1 ? k1 - lambda : (lambda > k2 ? lambda - k2 : -std::min(lambda - k1, k2 - lambda));
    if (signed_distance < r.margin) {
      r.margin = signed_distance;
      r.nearest_eigenvalue = lambda;
    }
  }
  if (!eig.complete && eig.coverage - k2 < r.margin) {
    r.margin = eig.coverage - k2;
    r.nearest_eigenvalue = eig.coverage;
  }
  r.open = r.margin > 0;
  return r;
}

GapReport gap_persistence(const ModelPtr& model, double b0, double epsilon, double k1, double k2) {
  if (!(k1 < k2)) throw ConfigError("gap_persistence: need k1 < k2");
  const DiscreteHamiltonian h = assemble(model, b0 + epsilon);
  return gap_report(eigensolve_below(h, k2), epsilon, k1, k2);
}

EdgeSweep edge_sweep(const ModelPtr& model, double b0, const std::vector<double>& epsilons, double a1, double a2) {
  EdgeSweep sweep;
  auto edges = [&](double eps) {
    const DiscreteHamiltonian h = assemble(model, b0 + eps);
    const SpectralIsland island = spectral_island(eigensolve_below(h, a2), a1, a2);
    if (island.empty()) throw PreconditionError("empty_island", "no spectrum inside the island window");
    return std::pair{island.s_minus, island.s_plus};
  };
  const auto [m0, p0] = edges(0.0);
  double sxy = 0, sxx = 0;
  std::vector<double> xs, ys;
  for (double eps : epsilons) {
    const auto [m, p] = edges(eps);
    sweep.epsilon.push_back(eps);
    sweep.s_minus.push_back(m);
    sweep.s_plus.push_back(p);
    if (eps == 0.0) continue;
    const double shift = std::max(std::abs(m - m0), std::abs(p - p0));
    sweep.lipschitz = std::max(sweep.lipschitz, shift / std::abs(eps));
    xs.push_back(std::abs(eps));
    ys.push_back(shift);
    sxy += std::abs(eps) * shift;
    sxx += eps * eps;
  }
  if (sxx > 0) {
    sweep.fitted_slope = sxy / sxx;
    double mean = 0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(ys.size());
    double ssr = 0, sst = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ssr += std::pow(ys[i] - sweep.fitted_slope * xs[i], 2);
      sst += std::pow(ys[i] - mean, 2);
    }
    sweep.r2 = sst > 0 ? 1.0 - ssr / sst : 1.0;
  }
  return sweep;
}

}  // namespace magspec
