#pragma once

#include <boost/math/special_functions/bessel.hpp>

#include <Eigen/Dense>

#include <cmath>

// Xi(i kappa) for two circles from the Bessel addition theorem:
// log det(1 - A U B U^T) with A_m = I_m(kappa r1) / K_m(kappa r1),
// B_k likewise for r2 and U_mk = K_{m+k}(kappa d), |m|, |k| <= order.
// Evaluated in the balanced form 1 - N N^T, N = A^{1/2} U B^{1/2}.
inline double two_circle_oracle(double r1, double r2, double centers, double kappa, int order) {
  using boost::math::cyl_bessel_i;
  using boost::math::cyl_bessel_k;
  const int size = 2 * order + 1;
  Eigen::MatrixXd u(size, size);
  Eigen::VectorXd a(size), b(size);
  for (int i = 0; i < size; ++i) {
    const int m = i - order;
    a(i) = cyl_bessel_i(std::abs(m), kappa * r1) / cyl_bessel_k(std::abs(m), kappa * r1);
    b(i) = cyl_bessel_i(std::abs(m), kappa * r2) / cyl_bessel_k(std::abs(m), kappa * r2);
    for (int j = 0; j < size; ++j) u(i, j) = cyl_bessel_k(std::abs(m + j - order), kappa * centers);
  }
  const Eigen::MatrixXd nb = a.cwiseSqrt().asDiagonal() * u * b.cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd m = nb * nb.transpose();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(size, size);
  return std::log((id - m).llt().matrixL().determinant()) * 2.0;
}
