#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "magspec/hamiltonian.hpp"
#include "magspec/kernel.hpp"

namespace magspec {

struct EigenDecomposition {
  Eigen::VectorXd values;  // ascending
  DenseMatrix vectors;     // orthonormal columns
  int dim = 0;
  bool complete = false;
  // Every eigenvalue strictly below `coverage` is among `values`.
  double coverage = std::numeric_limits<double>::infinity();
  double max_residual = 0.0;

  int count() const { return static_cast<int>(values.size()); }
};

// Full decomposition of a Hermitian matrix (LAPACK divide and conquer).
EigenDecomposition eigensolve(const DenseMatrix& hermitian);
// Full decomposition with residual and orthonormality certification.
EigenDecomposition eigensolve(const DiscreteHamiltonian& h);

struct PartialSolveOptions {
  double tol = 1e-10;          // residual tolerance relative to ‖H‖
  int dense_threshold = 1200;  // full dense LAPACK decomposition up to this dimension
  int max_iter = 2000;
  unsigned seed = 7;
};

// Lowest `count` eigenpairs.
EigenDecomposition eigensolve_lowest(const DiscreteHamiltonian& h, int count, const PartialSolveOptions& opts = {});
// All eigenpairs below `upper`, plus at least one eigenvalue above it when the spectrum extends that far.
EigenDecomposition eigensolve_below(const DiscreteHamiltonian& h, double upper, const PartialSolveOptions& opts = {});

// Orthogonal projection held either as an orthonormal basis of its range or as a dense matrix.
class Projection {
 public:
  static Projection from_basis(DenseMatrix basis, double cell_area);
  // Certifies idempotency and self-adjointness of `op`; throws NumericalError if they fail.
  static Projection from_dense(DenseMatrix op, double cell_area, double tol = 1e-9);

  int dim() const;
  int rank() const { return rank_; }
  double cell_area() const { return cell_area_; }
  bool low_rank() const { return is_basis_; }

  // Orthonormal basis of the range (computed from the dense form if needed).
  DenseMatrix basis() const;
  DenseMatrix dense() const;
  KernelOperator kernel() const { return {dense(), cell_area_}; }
  // Diagonal entries of the matrix (operator) representation.
  Eigen::VectorXd diagonal() const;
  Vector apply(const Vector& v) const;

  struct Certificate {
    double idempotency = 0.0;
    double self_adjointness = 0.0;
    double trace_minus_rank = 0.0;
  };
  Certificate certify() const;

 private:
  DenseMatrix data_;  // range basis (n x rank) or the full matrix (n x n)
  bool is_basis_ = true;
  int rank_ = 0;
  double cell_area_ = 1.0;
};

// Spectral projection onto eigenvalues in (lower, upper) from a decomposition that covers `upper`.
Projection spectral_projection(const EigenDecomposition& eig, double lower, double upper, double cell_area);

// (H - z)^{-1} as a kernel operator, from a complete decomposition.
KernelOperator resolvent(const EigenDecomposition& eig, cplx z, double cell_area, double min_distance = 1e-10);
KernelOperator resolvent(const DiscreteHamiltonian& h, cplx z);

struct Contour {
  double center = 0.0;
  double radius = 1.0;
  int nodes = 64;

  cplx node(int q) const;
  // Trapezoid weight w_q so that (i/2π)∮ f(z) dz ≈ Σ_q w_q f(z_q).
  cplx weight(int q) const;
};

// Circle around [s_minus, s_plus] passing through the gap at relative margin `margin`.
Contour island_contour(double s_minus, double s_plus, double gap_below, double gap_above, double margin_fraction = 0.1,
                       int nodes = 64);

struct RieszResult {
  Projection projection;
  double quadrature_mismatch = 0.0;  // ‖quadrature - eigenvector sum‖
  double contour_margin = 0.0;       // min distance from the contour to the spectrum
};

// Riesz projection (i/2π)∮(H - z)^{-1} dz. The eigenvector sum is returned; the
// trapezoid rule is evaluated as a cross-check and a mismatch above 1e-6 is an error.
RieszResult riesz_projection(const EigenDecomposition& eig, const Contour& contour, double cell_area);
// Same, summing the resolvent matrices node by node (dense, small problems only).
DenseMatrix riesz_quadrature_dense(const EigenDecomposition& eig, const Contour& contour);

struct SpectralIsland {
  double a1 = 0.0;
  double a2 = 0.0;
  std::vector<double> eigenvalues;
  double s_minus = 0.0;
  double s_plus = 0.0;
  double gap_below = 0.0;  // distance from a1 to the nearest eigenvalue below
  double gap_above = 0.0;

  bool empty() const { return eigenvalues.empty(); }
  int count() const { return static_cast<int>(eigenvalues.size()); }
};

// Eigenvalues in (a1, a2); errors if a1 or a2 lies within `min_margin` of the spectrum.
SpectralIsland spectral_island(const EigenDecomposition& eig, double a1, double a2, double min_margin = 1e-9);

struct GapReport {
  double epsilon = 0.0;
  double margin = 0.0;  // signed: positive is the distance of the spectrum to [k1, k2], negative the depth of intrusion
  double nearest_eigenvalue = 0.0;
  bool open = false;
};

// Does the interval [k1, k2] stay in the resolvent set of H_{b0+ε}?
GapReport gap_persistence(const ModelPtr& model, double b0, double epsilon, double k1, double k2);
GapReport gap_report(const EigenDecomposition& eig, double epsilon, double k1, double k2);

struct EdgeSweep {
  std::vector<double> epsilon;
  std::vector<double> s_minus;
  std::vector<double> s_plus;
  double lipschitz = 0.0;     // max |Δs| / |ε|
  double fitted_slope = 0.0;  // least squares |Δs| ≈ c |ε| through the origin
  double r2 = 0.0;
};

// Island edges of H_{b0+ε} inside (a1, a2) for each ε.
EdgeSweep edge_sweep(const ModelPtr& model, double b0, const std::vector<double>& epsilons, double a1, double a2);

}  // namespace magspec
