#include "blocks.hpp"

#include <Eigen/QR>

namespace magspec::detail {

DenseMatrix random_block(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  DenseMatrix x(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = cplx(normal(rng), normal(rng));
  return x;
}

DenseMatrix householder_orthonormalize(const DenseMatrix& y) {
  Eigen::HouseholderQR<DenseMatrix> qr(y);
  return qr.householderQ() * DenseMatrix::Identity(y.rows(), y.cols());
}

// Two passes of Cholesky QR (BLAS-3 only); falls back to Householder when the
// Gram matrix is numerically singular.
DenseMatrix orthonormalize(const DenseMatrix& y) {
  DenseMatrix q = y;
  for (int pass = 0; pass < 2; ++pass) {
    DenseMatrix gram = q.adjoint() * q;
    Eigen::LLT<DenseMatrix> llt(gram);
    if (llt.info() != Eigen::Success) return householder_orthonormalize(y);
    const DenseMatrix upper = llt.matrixU();
    q = upper.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(q);
  }
  return q;
}

}  // namespace magspec::detail
