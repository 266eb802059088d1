#pragma once

#include <Eigen/Dense>

namespace omk {

// Right eigenpairs of a general complex matrix, H R = R diag(mu), and
// L = R^{-1} so that H = R diag(mu) L. Backed by LAPACK zgeev.
struct ModalBasis {
  Eigen::VectorXcd mu;
  Eigen::MatrixXcd R;
  Eigen::MatrixXcd L;
};

ModalBasis modal_decomposition(const Eigen::MatrixXcd& H);

// phi_1, phi_2, phi_3 of each entry of z, evaluated by contour averaging so
// small |z| stays accurate.
struct PhiFunctions {
  Eigen::VectorXcd phi1, phi2, phi3;
};

PhiFunctions phi_functions(const Eigen::VectorXcd& z);

}  // namespace omk
