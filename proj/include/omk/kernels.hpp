#pragma once
// Execution-policy switch shared by the embarrassingly parallel kernels.
// Every parallel kernel has a serial twin that produces bit-identical output;
// the serial path is the reference used by the tests.

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/SparseCore>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omk {

enum class Exec { Serial, Parallel };

// Thread count used by Exec::Parallel (0 or negative: leave the runtime default).
void set_threads(int n);
int thread_count();

// Calls f(i) for i in [0, n). Work items must write to disjoint outputs.
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) f(static_cast<std::size_t>(i));
}

using SparseRowMatrix = Eigen::SparseMatrix<std::complex<double>, Eigen::RowMajor>;

// y = A x for a compressed row-major matrix.
void spmv_serial(const SparseRowMatrix& A, const std::complex<double>* x,
                 std::complex<double>* y);
void spmv_parallel(const SparseRowMatrix& A, const std::complex<double>* x,
                   std::complex<double>* y);
inline void spmv(const SparseRowMatrix& A, const std::complex<double>* x,
                 std::complex<double>* y, Exec exec) {
  exec == Exec::Serial ? spmv_serial(A, x, y) : spmv_parallel(A, x, y);
}

}  // namespace omk
