#pragma once

// Dense block helpers shared by the iterative eigensolvers.

#include <random>

#include "magspec/hamiltonian.hpp"

namespace magspec::detail {

// Complex Gaussian n x p block.
DenseMatrix random_block(int n, int p, std::mt19937_64& rng);
DenseMatrix householder_orthonormalize(const DenseMatrix& y);
// Orthonormal basis of the column span of a full-rank block.
DenseMatrix orthonormalize(const DenseMatrix& y);

}  // namespace magspec::detail
