#pragma once

// Thin wrappers over LAPACKE's Hermitian eigensolvers.

#include <Eigen/Dense>
#include <complex>

namespace magspec::lapack {

// All eigenvalues (ascending) and, if vectors != nullptr, eigenvectors. `a` is overwritten.
void heev_full(Eigen::MatrixXcd& a, Eigen::VectorXd& values, bool want_vectors);

// Eigenpairs with indices [first, last] (0-based, inclusive) in ascending order.
void heev_index_range(const Eigen::MatrixXcd& a, int first, int last, Eigen::VectorXd& values,
                      Eigen::MatrixXcd* vectors);

// Eigenpairs with eigenvalue in (lower, upper].
void heev_value_range(const Eigen::MatrixXcd& a, double lower, double upper, Eigen::VectorXd& values,
                      Eigen::MatrixXcd* vectors);

}  // namespace magspec::lapack
