#pragma once

#include <Eigen/Core>

namespace fp::linalg {

/// A = Q * R with Q (m x m) orthogonal and R (m x n) upper trapezoidal.
/// Built from explicit Householder reflections; R's diagonal is made
/// non-negative by flipping the matching columns of Q.
struct QR {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

QR householder_qr(const Eigen::MatrixXd& A);

}  // namespace fp::linalg
