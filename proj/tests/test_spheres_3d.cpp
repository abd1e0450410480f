#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>

#include "relxi/spheres_3d.hpp"

using namespace relxi;

namespace {

// Boost oracles in the e^{-x}/x convention for k_l.
double oracle_sph_i(int l, double x) {
  return std::sqrt(std::numbers::pi / (2.0 * x)) * boost::math::cyl_bessel_i(l + 0.5, x);
}
double oracle_sph_k(int l, double x) {
  return std::sqrt(2.0 / (std::numbers::pi * x)) * boost::math::cyl_bessel_k(l + 0.5, x);
}

Scene sphere_scene(const Vec3& c1, double r1, const Vec3& c2, double r2) {
  return Scene(3, {Sphere{c1, r1}, Sphere{c2, r2}});
}

}  // namespace

TEST(SingleSphere, MonopoleClosedForm) {
  const auto s = single_sphere_eigs(1.0, 1.0, 0);
  EXPECT_NEAR(s[0], 0.43233235838169365, 1e-15);
}

TEST(SingleSphere, StaticLimit) {
  const auto s = single_sphere_eigs(1.0, 1e-4, 2);
  EXPECT_NEAR(s[2], 0.2, 1e-6);
  const auto scaled = single_sphere_eigs(2.5, 1e-5, 6);
  for (int l = 0; l <= 6; ++l) EXPECT_NEAR(scaled[l], 2.5 / (2 * l + 1), 1e-4 * scaled[l]) << l;
}

TEST(SingleSphere, AgreesWithDirectGalerkin) {
  const auto s = single_sphere_eigs(1.0, 1.0, 5);
  for (int l = 0; l <= 5; ++l) EXPECT_NEAR(single_sphere_galerkin(1.0, 1.0, l, 48), s[l], 1e-6) << "l=" << l;
}

TEST(SingleSphere, GalerkinAtOtherRadius) {
  const auto s = single_sphere_eigs(0.6, 3.0, 4);
  for (int l = 0; l <= 4; ++l) EXPECT_NEAR(single_sphere_galerkin(0.6, 3.0, l, 48), s[l], 1e-6) << "l=" << l;
}

TEST(SingleSphere, MatchesBoostProduct) {
  for (double radius : {0.5, 1.0, 2.0}) {
    for (double kappa : {0.05, 1.0, 7.0, 40.0}) {
      const double x = kappa * radius;
      const auto s = single_sphere_eigs(radius, kappa, 20);
      for (int l = 0; l <= 20; ++l) {
        const double expected = kappa * radius * radius * oracle_sph_i(l, x) * oracle_sph_k(l, x);
        EXPECT_NEAR(s[l], expected, 1e-12 * expected) << "x=" << x << " l=" << l;
        EXPECT_GT(s[l], 0.0);
      }
    }
  }
}

TEST(SingleSphere, Errors) {
  EXPECT_THROW(single_sphere_eigs(1.0, 601.0, 4), RangeError);
  EXPECT_NO_THROW(single_sphere_eigs(1.0, 599.0, 4));
  EXPECT_THROW(single_sphere_eigs(1.0, 0.0, 4), DomainError);
  EXPECT_THROW(single_sphere_eigs(-1.0, 1.0, 4), DomainError);
  EXPECT_THROW(single_sphere_eigs(1.0, 1.0, 61), DomainError);
}

// Entries of the m = 0 block with a monopole on either side follow from the
// Yukawa addition theorem:
//   C(a, 0) = kappa R1 R2 i_0(kappa R2) i_a(kappa R1) k_a(kappa d) sqrt(2a+1)
//   C(0, b) = (-1)^b kappa R1 R2 i_0(kappa R1) i_b(kappa R2) k_b(kappa d) sqrt(2b+1)
TEST(CrossBlock, MonopoleRowAndColumnMatchAdditionTheorem) {
  struct Case {
    double r1, r2, separation, kappa;
  };
  for (const Case c : {Case{1.0, 1.0, 3.0, 1.0}, Case{1.0, 0.7, 2.5, 2.0}, Case{0.4, 1.3, 2.2, 0.3}}) {
    const int l_max = 10;
    const auto blocks = sphere_cross_blocks(c.r1, c.r2, c.separation, c.kappa, l_max);
    const Eigen::MatrixXd& block = blocks[0].matrix;
    const double scale = c.kappa * c.r1 * c.r2;
    for (int l = 0; l <= l_max; ++l) {
      const double column = scale * oracle_sph_i(0, c.kappa * c.r2) * oracle_sph_i(l, c.kappa * c.r1) *
                            oracle_sph_k(l, c.kappa * c.separation) * std::sqrt(2.0 * l + 1.0);
      const double row = (l % 2 == 0 ? 1.0 : -1.0) * scale * oracle_sph_i(0, c.kappa * c.r1) *
                         oracle_sph_i(l, c.kappa * c.r2) * oracle_sph_k(l, c.kappa * c.separation) *
                         std::sqrt(2.0 * l + 1.0);
      EXPECT_NEAR(block(l, 0), column, 1e-10 * std::abs(block(0, 0))) << "l=" << l;
      EXPECT_NEAR(block(0, l), row, 1e-10 * std::abs(block(0, 0))) << "l=" << l;
    }
  }
}

TEST(CrossBlock, OppositeAzimuthalIndexIdentical) {
  const Sphere a{{0.0, 0.0, 0.0}, 1.0};
  const Sphere b{{0.0, 0.0, 3.0}, 0.8};
  for (int m = 1; m <= 4; ++m) {
    const auto plus = cross_block(a, b, 1.5, 8, m);
    const auto minus = cross_block(a, b, 1.5, 8, -m);
    EXPECT_EQ(minus.m, -m);
    EXPECT_LE((plus.matrix - minus.matrix).cwiseAbs().maxCoeff(), 1e-13);
  }
  EXPECT_THROW(cross_block(a, b, 1.5, 3, 4), DomainError);
}

TEST(CrossBlock, BlockSizes) {
  const auto blocks = sphere_cross_blocks(1.0, 1.0, 3.0, 1.0, 6);
  ASSERT_EQ(blocks.size(), 7u);
  for (int m = 0; m <= 6; ++m) {
    EXPECT_EQ(blocks[m].matrix.rows(), 7 - m);
    EXPECT_EQ(blocks[m].matrix.cols(), 7 - m);
  }
}

TEST(CrossBlock, KernelBoundAtLargeSeparation) {
  const double r1 = 1.0, r2 = 0.5, kappa = 0.8;
  for (double separation : {10.0, 30.0}) {
    const double gap = separation - r1 - r2;
    const double bound = std::exp(-kappa * gap) / (4.0 * std::numbers::pi * gap) *
                         std::sqrt(4.0 * std::numbers::pi * r1 * r1 * 4.0 * std::numbers::pi * r2 * r2);
    for (const auto& block : sphere_cross_blocks(r1, r2, separation, kappa, 6)) {
      EXPECT_LE(block.matrix.cwiseAbs().maxCoeff(), bound) << "m=" << block.m;
    }
  }
}

TEST(CrossBlock, GridDoublingSelfConvergence) {
  const int l_max = 8;
  const auto coarse = sphere_cross_blocks(1.0, 1.0, 3.0, 1.0, l_max);
  const auto fine = sphere_cross_blocks(1.0, 1.0, 3.0, 1.0, l_max, 2 * default_polar_grid(l_max));
  for (int m = 0; m <= l_max; ++m) {
    EXPECT_LE((coarse[m].matrix - fine[m].matrix).cwiseAbs().maxCoeff(), 1e-9) << "m=" << m;
  }
}

TEST(CrossBlock, OverlapRejected) {
  EXPECT_THROW(sphere_cross_blocks(1.0, 1.0, 1.5, 1.0, 4), SceneError);
  EXPECT_THROW(sphere_cross_blocks(1.0, 1.0, 2.0, 1.0, 4), SceneError);
}

TEST(Xi3D, FarApartIsNegligible) {
  const auto sample = xi_eval_3d(sphere_scene({0, 0, 0}, 1.0, {0, 0, 50}, 1.0), 1.0, 6);
  EXPECT_LE(std::abs(sample.xi), 1e-40);
  EXPECT_EQ(sample.xi.imag(), 0.0);
}

TEST(Xi3D, LeadingPrefactorAtModerateKappa) {
  const double kappa = 6.0, gap = 1.0;
  const auto sample = xi_eval_3d(sphere_scene({0, 0, 0}, 1.0, {0, 0, 3}, 1.0), kappa, 12);
  EXPECT_LT(sample.xi.real(), 0.0);
  EXPECT_EQ(sample.xi.imag(), 0.0);
  const double scaled = -sample.xi.real() * std::exp(2.0 * kappa * gap);
  EXPECT_NEAR(scaled, 1.0 / 12.0, 0.25 / 12.0);
}

TEST(Xi3D, SwapAndRigidMotionInvariance) {
  const Scene scene = sphere_scene({0.2, -0.1, 0.4}, 1.0, {1.3, 2.1, 1.9}, 0.7);
  const Scene swapped = sphere_scene({1.3, 2.1, 1.9}, 0.7, {0.2, -0.1, 0.4}, 1.0);
  const Scene moved = transformed(scene, 0.9, Vec3{-2.0, 0.5, 3.3});
  for (double kappa : {0.5, 2.0}) {
    const double xi = xi_eval_3d(scene, kappa, 12).xi.real();
    EXPECT_NEAR(xi_eval_3d(swapped, kappa, 12).xi.real(), xi, 1e-9 * std::abs(xi));
    EXPECT_NEAR(xi_eval_3d(moved, kappa, 12).xi.real(), xi, 1e-9 * std::abs(xi));
  }
}

TEST(Xi3D, TruncationGapShrinksPastCrossover) {
  const double kappa = 2.0, radius = 1.0;
  const int start = static_cast<int>(std::ceil(kappa * radius)) + 4;
  double previous = std::numeric_limits<double>::infinity();
  for (int l_max = start; l_max <= start + 10; l_max += 2) {
    const double gap = std::abs(xi_sphere_pair(radius, radius, 3.0, kappa, l_max) -
                                xi_sphere_pair(radius, radius, 3.0, kappa, l_max + 2));
    EXPECT_LT(gap, previous) << "L=" << l_max;
    previous = gap;
  }
}

TEST(Xi3D, ConvergenceFlag) {
  const Scene scene = sphere_scene({0, 0, 0}, 1.0, {0, 0, 2.4}, 1.0);
  const auto coarse = xi_eval_3d(scene, 1.0, 2);
  EXPECT_FALSE(coarse.converged);
  EXPECT_GT(coarse.error_estimate, 1e-6 * std::abs(coarse.xi));
  const auto fine = xi_eval_3d(scene, 1.0, 30);
  EXPECT_TRUE(fine.converged);
  EXPECT_EQ(fine.n, 30);
  EXPECT_NEAR(fine.lambda.imag(), 1.0, 0.0);
}

TEST(Xi3D, ScenesOtherThanTwoSpheresRejected) {
  EXPECT_THROW(xi_eval_3d(Scene(2, {Circle{{0, 0}, 1.0}, Circle{{3, 0}, 1.0}}), 1.0, 4), SceneError);
  EXPECT_THROW(xi_eval_3d(sphere_scene({0, 0, 0}, 1.0, {0, 0, 3}, 1.0), -1.0, 4), DomainError);
  EXPECT_THROW(xi_eval_3d(sphere_scene({0, 0, 0}, 1.0, {0, 0, 3}, 1.0), 1.0, 59), ConfigError);
}
