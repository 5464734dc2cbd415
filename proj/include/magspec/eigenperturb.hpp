#pragma once

#include <vector>

#include "magspec/hamiltonian.hpp"
#include "magspec/kernel.hpp"
#include "magspec/spectral.hpp"
#include "magspec/sweep.hpp"

namespace magspec {

struct EigenstateData {
  double energy = 0.0;
  Vector state;           // unit norm
  int multiplicity = 1;
  double gap = 0.0;       // distance to the rest of the spectrum
  double residual = 0.0;  // ‖Hψ - eψ‖ / ‖H‖
  DecayFit decay;         // |ψ(x)| against ‖x‖; empty (bins = 0) when there is nothing to fit
};

// The `index`-th eigenvalue of h (0 = lowest) with its eigenvector, multiplicity and gap.
EigenstateData isolated_eigenstate(const DiscreteHamiltonian& h, int index = 0);

struct ReducedResolvent {
  KernelOperator resolvent;  // (1 - P)(H - μ)^{-1}(1 - P)
  double mu = 0.0;
  double defect = 0.0;        // ‖(1 - P)(H - μ)R - (1 - P)‖
  double annihilation = 0.0;  // ‖R P‖
};

// Σ over eigenpairs outside the range of P of (λ_k - μ)^{-1} v_k v_k†. `eig` must be complete.
ReducedResolvent reduced_resolvent(const DiscreteHamiltonian& h, const EigenDecomposition& eig, const Projection& p,
                                   double mu, double margin = 1e-8);

struct FeshbachResult {
  double energy = 0.0;
  int iterations = 0;
  std::vector<double> history;
  double min_denominator = 0.0;  // smallest |λ - μ| of the restricted operator at the fixed point
};

// Fixed point of μ ↦ e₀ + ⟨ψ, Wψ⟩ - ⟨Wψ, (H̃_b - μ)^{-1} Wψ⟩ with W = H_b - H_{b0} and H̃_b the
// compression of H_b to the orthogonal complement of ψ, starting from μ = e₀.
FeshbachResult feshbach_iterate(const DiscreteHamiltonian& hb, const DiscreteHamiltonian& hb0,
                                const EigenstateData& state, double tol = 1e-12, int max_iter = 100);

// e₀ + ⟨ψ, Wψ⟩ - ⟨Wψ, R₀ Wψ⟩.
double second_order_eigenvalue(const Vector& psi, double e0, const SparseMatrix& w, const ReducedResolvent& r0);

struct ExpansionRow {
  double epsilon = 0.0;
  double exact = 0.0;
  double first = 0.0;
  double second = 0.0;
  double residual = 0.0;  // |exact - second|
};

struct ExpansionSweep {
  std::vector<ExpansionRow> rows;
  SweepResult second_order;    // |e_ε - e^(2)_ε|
  SweepResult first_order;     // |e_ε - e^(1)_ε|
  SweepResult eigenvalue_shift;  // |e_ε - e₀|
  SweepResult projected_energy;  // ‖H_b (P_b - P_{b0})‖
  DecayFit kato_nagy_decay;    // (U - 1) for the rank-one pair at the largest ε
  double kato_nagy_unitarity = 0.0;
  double kato_nagy_intertwining = 0.0;
};

// Compares the exact eigenvalue of H_{b0+ε} with its first and second order expansions about b0.
ExpansionSweep expansion_order_sweep(const ModelPtr& model, double b0, const std::vector<double>& epsilons,
                                     int index = 0);

}  // namespace magspec
