#pragma once

// Xi(i kappa) for a pair of spheres. In the surface-orthonormal spherical
// harmonic basis each single-sphere operator is diagonal; the cross blocks
// are computed by product quadrature of the smooth Yukawa kernel after the
// pair is placed on the z axis, where the azimuthal index m is conserved.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "relxi/error.hpp"
#include "relxi/geometry.hpp"
#include "relxi/special_functions.hpp"
#include "relxi/xi_sample.hpp"

namespace relxi {

inline constexpr double kMaxSphereArgument = 600.0;

/// s_l = kappa R^2 i_l(kappa R) k_l(kappa R), l = 0..L.
inline std::vector<double> single_sphere_eigs(double radius, double kappa, int l_max) {
  if (!(kappa > 0.0)) throw DomainError("single_sphere_eigs: kappa must be positive");
  if (!(radius > 0.0)) throw DomainError("single_sphere_eigs: radius must be positive");
  if (l_max < 0 || l_max > special::kMaxSphOrder) {
    throw DomainError("single_sphere_eigs: L out of range [0, 60]: " + std::to_string(l_max));
  }
  const double x = kappa * radius;
  if (x > kMaxSphereArgument) {
    throw RangeError("single_sphere_eigs: kappa R = " + std::to_string(x) + " exceeds 600");
  }
  std::vector<double> s(l_max + 1);
  for (int l = 0; l <= l_max; ++l) s[l] = kappa * radius * radius * special::mod_sph_product(l, x);
  return s;
}

/// Orthonormal associated Legendre functions Pbar_l^m(cos theta), l = m..L,
/// normalized so that Pbar e^{i m phi} has unit norm on the unit sphere.
inline std::vector<double> normalized_legendre(int m, int l_max, double x) {
  std::vector<double> p(std::max(0, l_max - m + 1), 0.0);
  if (p.empty()) return p;
  const double sine = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int k = 1; k <= m; ++k) pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * sine;
  p[0] = pmm;
  if (l_max == m) return p;
  p[1] = x * std::sqrt(2.0 * m + 3.0) * pmm;
  for (int l = m + 2; l <= l_max; ++l) {
    const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
    const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                               (4.0 * (l - 1) * (l - 1) - 1.0));
    p[l - m] = a * (x * p[l - m - 1] - b * p[l - m - 2]);
  }
  return p;
}

/// Coupling of the m-th harmonics of two spheres.
struct CrossBlock3D {
  int m = 0;
  // Row l - |m| on sphere 1, column l' - |m| on sphere 2.
  Eigen::MatrixXd matrix;
};

/// Default polar grid for surface products: max(32, 2L + 8).
inline int default_polar_grid(int l_max) { return std::max(32, 2 * l_max + 8); }

/// All cross blocks m = 0..L for spheres of radii r1, r2 whose centers are a
/// distance `separation` apart. Entries are <Y_lm | G | Y_l'm> with Y
/// orthonormal on each surface.
inline std::vector<CrossBlock3D> sphere_cross_blocks(double r1, double r2, double separation, double kappa,
                                                     int l_max, int n_polar = 0) {
  if (!(kappa > 0.0)) throw DomainError("cross_block: kappa must be positive");
  if (!(separation > r1 + r2)) throw SceneError("cross_block: spheres overlap or touch");
  if (l_max < 0 || l_max > special::kMaxSphOrder) throw DomainError("cross_block: L out of range");
  if (n_polar <= 0) n_polar = default_polar_grid(l_max);
  const int n_az = 2 * n_polar;

  std::vector<double> x, w;
  gauss_legendre(n_polar, x, w);
  std::vector<double> sine(n_polar);
  for (int a = 0; a < n_polar; ++a) sine[a] = std::sqrt(std::max(0.0, 1.0 - x[a] * x[a]));

  // cos(m psi_k) table; psi and -psi pair up, so only k = 0..n_az/2 are kept.
  const int half = n_az / 2;
  std::vector<double> az_weight(half + 1, 2.0);
  az_weight[0] = az_weight[half] = 1.0;
  Eigen::MatrixXd cos_table(l_max + 1, half + 1);
  std::vector<double> cos_psi(half + 1);
  for (int k = 0; k <= half; ++k) {
    const double psi = kTwoPi * k / n_az;
    cos_psi[k] = std::cos(psi);
    for (int m = 0; m <= l_max; ++m) cos_table(m, k) = std::cos(m * psi) * az_weight[k];
  }

  // f[m](a, b) = w_a w_b * 2pi * int_0^{2pi} G cos(m psi) dpsi
  std::vector<Eigen::MatrixXd> f(l_max + 1, Eigen::MatrixXd(n_polar, n_polar));
  Eigen::VectorXd kernel(half + 1);
  const double az_step = kTwoPi / n_az;
  for (int a = 0; a < n_polar; ++a) {
    const double rho1 = r1 * sine[a];
    const double z1 = r1 * x[a];
    for (int b = 0; b < n_polar; ++b) {
      const double rho2 = r2 * sine[b];
      const double dz = z1 - (separation + r2 * x[b]);
      const double base = rho1 * rho1 + rho2 * rho2 + dz * dz;
      for (int k = 0; k <= half; ++k) {
        const double dist = std::sqrt(base - 2.0 * rho1 * rho2 * cos_psi[k]);
        kernel(k) = std::exp(-kappa * dist) / (4.0 * std::numbers::pi * dist);
      }
      const Eigen::VectorXd g = cos_table * kernel;
      const double scale = w[a] * w[b] * kTwoPi * az_step;
      for (int m = 0; m <= l_max; ++m) f[m](a, b) = scale * g(m);
    }
  }

  std::vector<CrossBlock3D> blocks(l_max + 1);
  for (int m = 0; m <= l_max; ++m) {
    Eigen::MatrixXd legendre(l_max - m + 1, n_polar);
    for (int a = 0; a < n_polar; ++a) {
      const auto p = normalized_legendre(m, l_max, x[a]);
      for (int l = 0; l <= l_max - m; ++l) legendre(l, a) = p[l];
    }
    blocks[m].m = m;
    blocks[m].matrix = r1 * r2 * (legendre * f[m] * legendre.transpose());
  }
  return blocks;
}

namespace detail {

struct SpherePair {
  Sphere first;
  Sphere second;
  double separation;
};

// The only geometric data that matter are the radii and the center distance,
// so "rotating onto the z axis" reduces to reading those off.
inline SpherePair sphere_pair(const Scene& scene) {
  if (scene.dimension() != 3 || scene.size() != 2) {
    throw SceneError("spheres_3d: scene must contain exactly two spheres");
  }
  const auto* a = std::get_if<Sphere>(&scene.obstacle(0));
  const auto* b = std::get_if<Sphere>(&scene.obstacle(1));
  if (a == nullptr || b == nullptr) throw SceneError("spheres_3d: only sphere obstacles are supported");
  return {*a, *b, (a->center - b->center).norm()};
}

}  // namespace detail

/// Cross block for azimuthal index m (blocks for m and -m coincide).
inline CrossBlock3D cross_block(const Sphere& first, const Sphere& second, double kappa, int l_max, int m,
                                int n_polar = 0) {
  const int am = std::abs(m);
  if (am > l_max) throw DomainError("cross_block: |m| exceeds L");
  const double sep = (first.center - second.center).norm();
  auto blocks = sphere_cross_blocks(first.radius, second.radius, sep, kappa, l_max, n_polar);
  CrossBlock3D out = std::move(blocks[am]);
  out.m = m;
  return out;
}

/// Xi(i kappa) at truncation L without the convergence check.
inline double xi_sphere_pair(double r1, double r2, double separation, double kappa, int l_max, int n_polar = 0) {
  const auto s1 = single_sphere_eigs(r1, kappa, l_max);
  const auto s2 = single_sphere_eigs(r2, kappa, l_max);
  const auto blocks = sphere_cross_blocks(r1, r2, separation, kappa, l_max, n_polar);
  double total = 0.0;
  for (int m = 0; m <= l_max; ++m) {
    const Eigen::Index size = l_max - m + 1;
    Eigen::MatrixXd b = blocks[m].matrix;
    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = 0; j < size; ++j) b(i, j) /= std::sqrt(s1[m + i] * s2[m + j]);
    }
    const Eigen::MatrixXd gram = b * b.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    std::vector<double> mu(es.eigenvalues().data(), es.eigenvalues().data() + size);
    std::sort(mu.begin(), mu.end());
    double block = 0.0;
    for (double v : mu) {
      if (!(v < 1.0)) throw NumericalError("spheres_3d: I - D1^-1 C D2^-1 C^T is not positive definite");
      block += std::log1p(-v);
    }
    total += (m == 0 ? 1.0 : 2.0) * block;
  }
  return total;
}

/// Xi(i kappa) for two spheres, with the L vs L+2 difference as error estimate.
inline XiSample xi_eval_3d(const Scene& scene, double kappa, int l_max) {
  if (!(kappa > 0.0)) throw DomainError("xi_eval_3d: kappa must be positive");
  if (l_max < 0 || l_max + 2 > special::kMaxSphOrder) throw ConfigError("xi_eval_3d: L out of range [0, 58]");
  const auto pair = detail::sphere_pair(scene);
  const double r1 = pair.first.radius;
  const double r2 = pair.second.radius;
  XiSample sample;
  sample.lambda = cplx(0.0, kappa);
  sample.n = l_max;
  const double coarse = xi_sphere_pair(r1, r2, pair.separation, kappa, l_max);
  const double fine = xi_sphere_pair(r1, r2, pair.separation, kappa, l_max + 2);
  sample.xi = coarse;
  sample.error_estimate = std::abs(fine - coarse);
  sample.converged = sample.error_estimate <= 1e-6 * std::abs(coarse);
  return sample;
}

/// <Y_l0 | S | Y_l0> on one sphere by direct surface quadrature, without the
/// diagonal formula. The inner integral uses polar coordinates centered at the
/// target point, where the area element cancels the 1/r singularity.
inline double single_sphere_galerkin(double radius, double kappa, int l, int n_polar = 48) {
  if (!(kappa > 0.0) || !(radius > 0.0)) throw DomainError("single_sphere_galerkin: bad arguments");
  std::vector<double> x, w;
  gauss_legendre(n_polar, x, w);
  const int n_az = 2 * n_polar;
  const double pi = std::numbers::pi;
  double outer = 0.0;
  for (int a = 0; a < n_polar; ++a) {
    const double cos_alpha = x[a];
    const double sin_alpha = std::sqrt(std::max(0.0, 1.0 - cos_alpha * cos_alpha));
    const double y_target = normalized_legendre(0, l, cos_alpha)[l];
    double inner = 0.0;
    for (int b = 0; b < n_polar; ++b) {
      // beta in (0, pi) from Gauss-Legendre nodes mapped from [-1, 1]
      const double beta = 0.5 * pi * (x[b] + 1.0);
      const double dist = 2.0 * radius * std::sin(0.5 * beta);
      const double radial = std::cos(0.5 * beta) * std::exp(-kappa * dist) / (4.0 * pi * radius);
      double ring = 0.0;
      for (int k = 0; k < n_az; ++k) {
        const double gamma = kTwoPi * k / n_az;
        const double c = std::cos(beta) * cos_alpha - std::sin(beta) * std::cos(gamma) * sin_alpha;
        ring += normalized_legendre(0, l, c)[l];
      }
      inner += 0.5 * pi * w[b] * radial * ring * (kTwoPi / n_az);
    }
    outer += kTwoPi * w[a] * y_target * inner;
  }
  return radius * radius * outer;
}

}  // namespace relxi
