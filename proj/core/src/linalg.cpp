#include "facepulse/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace fp::linalg {

QR householder_qr(const Eigen::MatrixXd& A) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Eigen::MatrixXd R = A;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(m, m);
  const Eigen::Index steps = std::min(m - 1, n);

  for (Eigen::Index k = 0; k < steps; ++k) {
    Eigen::VectorXd v = R.block(k, k, m - k, 1);
    const double norm_x = v.norm();
    if (norm_x == 0.0) continue;
    // Reflect onto -sign(x0)*|x| e1 so the update never cancels.
    const double alpha = v(0) >= 0.0 ? -norm_x : norm_x;
    v(0) -= alpha;
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 == 0.0) continue;

    // R <- H R, Q <- Q H with H = I - 2 v v^T / (v^T v)
    auto Rk = R.block(k, k, m - k, n - k);
    const Eigen::RowVectorXd w = (v.transpose() * Rk) * (2.0 / vnorm2);
    Rk.noalias() -= v * w;
    R.block(k + 1, k, m - k - 1, 1).setZero();
    R(k, k) = alpha;

    auto Qk = Q.block(0, k, m, m - k);
    const Eigen::VectorXd u = (Qk * v) * (2.0 / vnorm2);
    Qk.noalias() -= u * v.transpose();
  }

  for (Eigen::Index k = 0; k < std::min(m, n); ++k) {
    if (R(k, k) < 0.0) {
      R.row(k) *= -1.0;
      Q.col(k) *= -1.0;
    }
  }
  return {std::move(Q), std::move(R)};
}

}  // namespace fp::linalg
