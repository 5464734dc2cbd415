#pragma once

#include <vector>

#include "magspec/field.hpp"
#include "magspec/hamiltonian.hpp"
#include "magspec/kernel.hpp"
#include "magspec/spectral.hpp"

namespace magspec {

// Matrix of Peierls dressing factors e^{iεφ(x_i, x_j)}.
DenseMatrix dressing_phases(const Grid& grid, const FieldProfile& profile, double epsilon,
                            int quad_order = kDefaultQuadOrder);

// K(x, x') ↦ e^{iεφ(x, x')} K(x, x').
KernelOperator dress_kernel(const KernelOperator& k, const Grid& grid, const FieldProfile& profile, double epsilon,
                            int quad_order = kDefaultQuadOrder);

// S_ε(z): the dressed resolvent of H_{b0}.
KernelOperator quasi_inverse_S(const EigenDecomposition& eig_b0, const Model& model, cplx z, double epsilon);
KernelOperator quasi_inverse_S(const DiscreteHamiltonian& hb0, cplx z, double epsilon);

// T_ε(z) = (H_b - z) S_ε(z) - 1.
KernelOperator defect_T(const DiscreteHamiltonian& hb, const KernelOperator& s, cplx z);

struct MptResolvent {
  KernelOperator approximation;  // S Σ_{k ≤ order} (-T)^k
  double t_norm = 0.0;
  double s_norm = 0.0;
  double bound = 0.0;  // ‖T‖^{order+1} ‖S‖ / (1 - ‖T‖)
};

// Truncated Neumann series for (H_b - z)^{-1} = S (1 + T)^{-1}. Errors if ‖T‖ ≥ 1.
MptResolvent mpt_resolvent(const DiscreteHamiltonian& hb, const KernelOperator& s, cplx z, int order);

// P̃_b = dressed P_{b0}.
KernelOperator tilde_projection(const Projection& p_b0, const Grid& grid, const FieldProfile& profile, double epsilon,
                                int quad_order = kDefaultQuadOrder);

// Δ = P̃² - P̃.
KernelOperator delta_defect(const KernelOperator& ptilde);

// First-order flux approximation iε e^{iεφ(x,x')} Σ_y fl(x,y,x') P(x,y) P(y,x') h²,
// evaluated through the composition identity fl = φ(x,y) + φ(y,x') - φ(x,x').
KernelOperator delta_first_order(const Projection& p_b0, const Grid& grid, const FieldProfile& profile,
                                 double epsilon, int quad_order = kDefaultQuadOrder);

struct NenciuResult {
  Projection projection;
  double delta_norm = 0.0;
  double idempotency = 0.0;
  double self_adjointness = 0.0;
};

// 𝒫 = P̃ + (P̃ - ½)((1 + 4Δ)^{-1/2} - 1), with the inverse square root from a
// Hermitian eigendecomposition of 1 + 4Δ. Errors if ‖Δ‖ ≥ 1/4.
NenciuResult nenciu_projection(const KernelOperator& ptilde);
// The same projection computed as the spectral projection of P̃ onto (½, ∞), which
// the formula equals identically. Needs only the eigenvectors above ½.
NenciuResult nenciu_projection_spectral(const KernelOperator& ptilde);

struct KatoNagyResult {
  KernelOperator unitary;
  double distance = 0.0;  // ‖P1 - P2‖
  double unitarity_defect = 0.0;
  double intertwining_defect = 0.0;  // ‖P1 U - U P2‖
};

// U = (1 - (P1 - P2)²)^{-1/2} (P1 P2 + (1 - P1)(1 - P2)). Errors if ‖P1 - P2‖ ≥ 1.
KatoNagyResult kato_nagy(const Projection& p1, const Projection& p2);

struct PowerSeriesResult {
  KernelOperator value;
  int terms = 0;
  double argument_norm = 0.0;
};

// Σ_k a_k D^k, truncated once a term's norm drops below 1e-14. Errors if ‖D‖ ≥ radius.
PowerSeriesResult kernel_power_series(const std::vector<double>& coefficients, double radius, const KernelOperator& d);

// Taylor coefficients of (1 + 4x)^{-1/2} - 1 (radius 1/4).
std::vector<double> inverse_sqrt_coefficients(int terms);

}  // namespace magspec
