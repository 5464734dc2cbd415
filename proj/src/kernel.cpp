#include "magspec/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lapack.hpp"
#include "magspec/error.hpp"

namespace magspec {

namespace {

// Deterministic start: all ones with a small aperiodic modulation, so that
// symmetric operators whose top singular vector is orthogonal to the constant
// function are still reached.
Vector start_vector(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(1.0 + 0.25 * std::sin(0.7548776662 * i + 0.3), 0.0);
  return v.normalized();
}

}  // namespace

double operator_norm(int dim, const std::function<Vector(const Vector&)>& apply,
                     const std::function<Vector(const Vector&)>& apply_adjoint, const PowerIterationOptions& opts) {
  if (dim == 0) return 0.0;
  Vector v = start_vector(dim);
  double sigma = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vector w = apply(v);
    const double next = w.norm();
    if (!std::isfinite(next)) throw NumericalError("operator_norm: non-finite iterate");
    if (next == 0.0) return 0.0;
    Vector u = apply_adjoint(w);
    const double un = u.norm();
    if (un == 0.0) return next;
    v = u / un;
    if (it > 0 && std::abs(next - sigma) <= opts.tol * next) return next;
    sigma = next;
  }
  return sigma;
}

double operator_norm(const DenseMatrix& k, const PowerIterationOptions& opts) {
  return operator_norm(
      static_cast<int>(k.cols()), [&](const Vector& v) -> Vector { return k * v; },
      [&](const Vector& v) -> Vector { return k.adjoint() * v; }, opts);
}

double hermitian_norm(const DenseMatrix& a) {
  DenseMatrix work = a;
  Eigen::VectorXd w;
  lapack::heev_full(work, w, false);
  if (w.size() == 0) return 0.0;
  return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit fit;
  const std::size_t n = std::min(x.size(), y.size());
  fit.points = static_cast<int>(n);
  if (n < 2) return fit;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.slope * x[i] - fit.intercept;
    ssr += r * r;
  }
  fit.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  return fit;
}

LinearFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  return fit_line(lx, ly);
}

DecayFit fit_decay_samples(const std::vector<double>& distance, const std::vector<double>& magnitude, double h,
                           double min_distance, double max_distance, double relative_floor, bool from_peak) {
  double peak = 0.0;
  for (double m : magnitude) peak = std::max(peak, m);
  const double floor = relative_floor * peak;
  // bin -> (max magnitude, distance where it occurs)
  std::map<long, std::pair<double, double>> bins;
  const double tol = 1e-9 * h;
  for (std::size_t k = 0; k < distance.size(); ++k) {
    const double d = distance[k];
    if (d < min_distance - tol || d > max_distance + tol) continue;
    const long bin = static_cast<long>(std::floor(d / h + 1e-9));
    auto& slot = bins[bin];
    if (magnitude[k] > slot.first) slot = {magnitude[k], d};
  }
  DecayFit fit;
  fit.min_distance = min_distance;
  fit.max_distance = max_distance;
  std::vector<double> logs;
  for (const auto& [bin, entry] : bins)
    if (entry.first > floor && entry.first > 0) {
      fit.distances.push_back(entry.second);
      fit.magnitudes.push_back(entry.first);
      logs.push_back(std::log(entry.first));
    }
  if (from_peak && !logs.empty()) {
    const auto top = std::max_element(logs.begin(), logs.end()) - logs.begin();
    fit.distances.erase(fit.distances.begin(), fit.distances.begin() + top);
    fit.magnitudes.erase(fit.magnitudes.begin(), fit.magnitudes.begin() + top);
    logs.erase(logs.begin(), logs.begin() + top);
    if (!fit.distances.empty()) fit.min_distance = fit.distances.front();
  }
  fit.bins = static_cast<int>(fit.distances.size());
  if (fit.bins < 5)
    throw NumericalError("decay fit needs at least 5 distance bins above the noise floor, found " +
                         std::to_string(fit.bins));
  const LinearFit line = fit_line(fit.distances, logs);
  fit.rate = -line.slope;
  fit.amplitude = std::exp(line.intercept);
  fit.r2 = line.r2;
  return fit;
}

DecayFit fit_exponential_decay(const KernelOperator& k, const Grid& grid, const BulkWindow& window,
                               const DecayFitOptions& opts) {
  if (k.dim() != grid.size()) throw ConfigError("decay fit: kernel does not match the grid");
  const double dmin = opts.min_distance >= 0 ? opts.min_distance : 2.0 * grid.h();
  const double dmax = opts.max_distance >= 0 ? opts.max_distance : window.half_width;
  std::vector<double> dist, mag;
  const std::size_t m = window.sites.size();
  dist.reserve(m * m);
  mag.reserve(m * m);
  for (int i : window.sites)
    for (int j : window.sites) {
      dist.push_back(site_distance(grid, i, j));
      mag.push_back(std::abs(k.kernel(i, j)));
    }
  return fit_decay_samples(dist, mag, grid.h(), dmin, dmax, opts.relative_floor, opts.from_peak);
}

}  // namespace magspec
