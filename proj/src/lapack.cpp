#include "lapack.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <string>
#include <vector>

#include "magspec/error.hpp"

namespace magspec::lapack {

namespace {

void check(lapack_int info, const char* routine) {
  if (info != 0) throw NumericalError(std::string(routine) + " failed with info=" + std::to_string(info));
}

void heevr(const Eigen::MatrixXcd& a, char range, double vl, double vu, int il, int iu, Eigen::VectorXd& values,
           Eigen::MatrixXcd* vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXcd work = a;
  lapack_int found = 0;
  Eigen::VectorXd w(n);
  const lapack_int cols = range == 'I' ? iu - il + 1 : n;
  Eigen::MatrixXcd z;
  if (vectors) z.resize(n, cols);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max<lapack_int>(cols, 1)));
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', range, 'U', n, work.data(), n, vl,
                                         vu, il, iu, 0.0, &found, w.data(), vectors ? z.data() : nullptr,
                                         vectors ? n : 1, support.data());
  check(info, "zheevr");
  values = w.head(found);
  if (vectors) *vectors = z.leftCols(found);
}

}  // namespace

void heev_full(Eigen::MatrixXcd& a, Eigen::VectorXd& values, bool want_vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  values.resize(n);
  if (n == 0) return;
  check(LAPACKE_zheevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'U', n, a.data(), n, values.data()), "zheevd");
}

void heev_index_range(const Eigen::MatrixXcd& a, int first, int last, Eigen::VectorXd& values,
                      Eigen::MatrixXcd* vectors) {
  heevr(a, 'I', 0.0, 0.0, first + 1, last + 1, values, vectors);
}

void heev_value_range(const Eigen::MatrixXcd& a, double lower, double upper, Eigen::VectorXd& values,
                      Eigen::MatrixXcd* vectors) {
  heevr(a, 'V', lower, upper, 0, 0, values, vectors);
}

}  // namespace magspec::lapack
