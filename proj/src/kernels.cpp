#include "omk/kernels.hpp"

namespace omk {

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
inline std::complex<double> row_dot(const SparseRowMatrix& A, Eigen::Index r,
                                    const std::complex<double>* x) {
  const auto* outer = A.outerIndexPtr();
  const auto* inner = A.innerIndexPtr();
  const auto* val = A.valuePtr();
  std::complex<double> acc{};
  for (auto k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
  return acc;
}
}  // namespace

void spmv_serial(const SparseRowMatrix& A, const std::complex<double>* x,
                 std::complex<double>* y) {
  for (Eigen::Index r = 0; r < A.rows(); ++r) y[r] = row_dot(A, r, x);
}

void spmv_parallel(const SparseRowMatrix& A, const std::complex<double>* x,
                   std::complex<double>* y) {
  const Eigen::Index n = A.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < n; ++r) y[r] = row_dot(A, r, x);
}

}  // namespace omk
