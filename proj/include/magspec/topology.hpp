#pragma once

#include <string>
#include <vector>

#include "magspec/hamiltonian.hpp"
#include "magspec/spectral.hpp"
#include "magspec/sweep.hpp"

namespace magspec {

struct ChernReport {
  std::vector<double> half_widths;
  std::vector<double> values;  // window-averaged marker per half-width
  double extrapolated = 0.0;   // fit C(L) = C∞ + a / L over the windows
  int nearest_integer = 0;
  double deviation = 0.0;      // |extrapolated - nearest_integer|
  double max_imaginary = 0.0;  // largest |Im| of the windowed averages (should vanish)
};

// Window-averaged local Chern marker (2πi / area) Σ_{x ∈ Λ_L} P[[P, X1], [P, X2]](x, x) h²
// for each half-width, plus extrapolation in 1/L. Dirichlet boxes only; windows must
// keep a margin of at least 20% of the box to the boundary.
ChernReport chern_marker(const Projection& p, const Grid& grid, const std::vector<double>& half_widths);

struct FhsReport {
  int chern = 0;
  double raw = 0.0;       // sum of plaquette angles / 2π before rounding
  double min_gap = 0.0;   // smallest gap above the selected states over the twist mesh
  int mesh = 0;
  int band_count = 0;
};

// Chern number of the lowest `band_count` states of the torus operator, from
// Fukui-Hatsugai-Suzuki link variables over a mesh of boundary twist angles.
FhsReport fhs_chern_oracle(const ModelPtr& torus_model, double b, int band_count, int mesh = 6);

struct IdsReport {
  std::vector<double> half_widths;
  std::vector<double> values;  // Tr(χ_L P) / (4L²)
  double plateau = 0.0;        // value at the largest half-width
};

IdsReport ids(const Projection& p, const Grid& grid, const std::vector<double>& half_widths);

struct IdsSweepReport {
  std::vector<double> fields;
  std::vector<double> densities;
  std::vector<int> ranks;
  double intercept = 0.0;  // c0
  double slope = 0.0;      // c1, in 𝓘 = c0 + b c1 / 2π
  int slope_integer = 0;
  double residual = 0.0;   // max |𝓘 - fit|
  std::vector<double> dropped;  // fields where the gap closed
};

// IDS of the spectral projection below the gap (a1, a2) for each b; fits 𝓘(b) = c0 + b c1 / 2π.
// On the torus the whole box is the window.
IdsSweepReport ids_sweep(const ModelPtr& model, const std::vector<double>& fields, double a1, double a2);

// |Tr(χ_L P1) - Tr(χ_L P2)| for each L, with the log-log growth fit.
SweepResult local_trace_difference(const Projection& p1, const Projection& p2, const Grid& grid,
                                   const std::vector<double>& half_widths);

// ‖P1 - P2‖. Exact on the joint range for low-rank inputs; power iteration otherwise.
double projection_distance(const Projection& p1, const Projection& p2);

struct FermiProjection {
  Projection projection;
  double fermi_energy = 0.0;
  int rank = 0;
  double gap_above = 0.0;  // distance from the top kept eigenvalue to the next one
};

// Spectral projection of H_b onto eigenvalues below `energy`. Errors if `energy` lies
// within 1e-9 ‖H‖ of an eigenvalue.
FermiProjection fermi_projection(const ModelPtr& model, double b, double energy);
// Projection onto the `rank` lowest eigenvalues of H_b. Errors if the rank splits a degenerate cluster.
FermiProjection lowest_states(const ModelPtr& model, double b, int rank);

struct DistanceTrend {
  std::vector<int> box_sizes;
  std::vector<double> distances;
  std::vector<int> ranks;          // matched rank used for both projections
  std::vector<int> fermi_ranks_b;  // states of H_{b0+ε} below the Fermi energy, for reference
  std::vector<double> rank_gaps;   // gap above the matched rank of H_{b0+ε}
};

// ‖P_{b0+ε} - P_{b0}‖ on a sequence of models (typically growing boxes). P_{b0} is the Fermi
// projection below `fermi_energy`; P_{b0+ε} keeps the same number of lowest states.
DistanceTrend projection_distance_trend(const std::vector<ModelPtr>& models, double b0, double epsilon,
                                        double fermi_energy);

// ‖(P_{b0+ε} - P_{b0}) η‖ for each ε; η is normalized. Both are Fermi projections below `fermi_energy`.
SweepResult strong_continuity_probe(const ModelPtr& model, double b0, const std::vector<double>& epsilons,
                                    const Vector& eta, double fermi_energy);

// η = indicator of the central 3x3 patch.
Vector central_patch(const Grid& grid, int width = 3);

struct DerivativeProbe {
  SweepResult distance;   // ‖P_{b0+ε} - P_{b0}‖
  SweepResult remainder;  // ‖P_{b0+ε} - P_{b0} - ε D‖
  SweepResult asymmetry;  // ‖R(ε) - R(-ε)‖ = ‖P_{b0+ε} - P_{b0-ε} - 2ε D‖, odd part of the remainder R
};

// Finite-difference differentiability of b ↦ P_b for the projection onto the
// spectrum in (a1, a2); D is the central difference with step min|ε| / 10.
DerivativeProbe norm_derivative_probe(const ModelPtr& model, double b0, const std::vector<double>& epsilons, double a1,
                                      double a2);

}  // namespace magspec
