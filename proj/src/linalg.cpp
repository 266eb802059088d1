#include "omk/linalg.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <lapacke.h>

#include "omk/errors.hpp"

namespace omk {

ModalBasis modal_decomposition(const Eigen::MatrixXcd& H) {
  const lapack_int n = static_cast<lapack_int>(H.rows());
  if (H.rows() != H.cols() || n == 0) throw InvalidArgument("modal decomposition needs a square matrix");
  Eigen::MatrixXcd work = H;
  ModalBasis b;
  b.mu.resize(n);
  b.R.resize(n, n);
  auto* lc = reinterpret_cast<lapack_complex_double*>(work.data());
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, lc, n,
                    reinterpret_cast<lapack_complex_double*>(b.mu.data()), nullptr, n,
                    reinterpret_cast<lapack_complex_double*>(b.R.data()), n);
  if (info != 0) throw NumericalError("zgeev failed with info = " + std::to_string(info));
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(b.R);
  b.L = lu.inverse();
  return b;
}

PhiFunctions phi_functions(const Eigen::VectorXcd& z) {
  constexpr int M = 32;
  const Eigen::Index n = z.size();
  PhiFunctions f{Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> zi = z[i];
    if (std::abs(zi) > 1.0) {
      const auto e = std::exp(zi);
      f.phi1[i] = (e - 1.0) / zi;
      f.phi2[i] = (e - 1.0 - zi) / (zi * zi);
      f.phi3[i] = (e - 1.0 - zi - 0.5 * zi * zi) / (zi * zi * zi);
      continue;
    }
    std::complex<double> p1{}, p2{}, p3{};
    for (int k = 0; k < M; ++k) {
      const auto w = zi + std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / M);
      const auto e = std::exp(w);
      p1 += (e - 1.0) / w;
      p2 += (e - 1.0 - w) / (w * w);
      p3 += (e - 1.0 - w - 0.5 * w * w) / (w * w * w);
    }
    f.phi1[i] = p1 / double(M);
    f.phi2[i] = p2 / double(M);
    f.phi3[i] = p3 / double(M);
  }
  return f;
}

}  // namespace omk
