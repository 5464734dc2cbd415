#pragma once

#include <functional>
#include <string>
#include <vector>

#include "magspec/grid.hpp"
#include "magspec/hamiltonian.hpp"

namespace magspec {

// Dense operator on grid functions. `op` is the matrix acting on site values;
// the integral kernel is op / cell_area, so that (Ku)(x) = Σ_y K(x,y) u(y) h².
struct KernelOperator {
  DenseMatrix op;
  double cell_area = 1.0;

  KernelOperator() = default;
  KernelOperator(DenseMatrix m, double area) : op(std::move(m)), cell_area(area) {}

  int dim() const { return static_cast<int>(op.rows()); }
  cplx kernel(int i, int j) const { return op(i, j) / cell_area; }
};

struct PowerIterationOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

// Largest singular value by power iteration on K†K from a fixed start vector.
double operator_norm(const DenseMatrix& k, const PowerIterationOptions& opts = {});
// Same, for an operator given only through its action and the action of its adjoint.
double operator_norm(int dim, const std::function<Vector(const Vector&)>& apply,
                     const std::function<Vector(const Vector&)>& apply_adjoint,
                     const PowerIterationOptions& opts = {});
// Largest |eigenvalue| of a Hermitian matrix, via LAPACK. Used as a cross-check.
double hermitian_norm(const DenseMatrix& a);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Fit log y = slope log x + intercept, ignoring non-positive entries.
LinearFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct DecayFit {
  double amplitude = 0.0;  // C in C e^{-α d}
  double rate = 0.0;       // α
  double r2 = 0.0;
  int bins = 0;
  double min_distance = 0.0;
  double max_distance = 0.0;
  std::vector<double> distances;  // binned data used in the fit
  std::vector<double> magnitudes;
};

struct DecayFitOptions {
  double min_distance = -1.0;  // default 2h
  double max_distance = -1.0;  // default: window half-width
  double relative_floor = 1e-13;
  bool from_peak = false;  // drop bins before the largest binned magnitude (kernels that vanish on the diagonal)
};

// Bins |K(x,y)| over pairs with both points in the window by distance (bin width h),
// takes the per-bin maximum, and least-squares fits its logarithm against distance.
DecayFit fit_exponential_decay(const KernelOperator& k, const Grid& grid, const BulkWindow& window,
                               const DecayFitOptions& opts = {});
// Same, from (distance, magnitude) samples.
DecayFit fit_decay_samples(const std::vector<double>& distance, const std::vector<double>& magnitude, double h,
                           double min_distance, double max_distance, double relative_floor = 1e-13,
                           bool from_peak = false);

}  // namespace magspec
