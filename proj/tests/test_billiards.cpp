#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "relxi/billiards.hpp"
#include "relxi/scene_io.hpp"

using namespace relxi;

namespace {

// Two-mirror cavity stability with convex mirrors of radii r1, r2 a distance
// gap apart: g_i = 1 + gap / r_i and |det(I - M)| = 4 (g1 g2 - 1).
double cavity_det(double gap, double r1, double r2) {
  const double g1 = 1.0 + gap / r1;
  const double g2 = 1.0 + gap / r2;
  return 4.0 * (g1 * g2 - 1.0);
}

std::string scene_path(const std::string& name) { return std::string(RELXI_SCENE_DIR) + "/" + name; }

}  // namespace

TEST(Orbits, TwoUnitCircles) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{3.0, 0.0}, 1.0}});
  const auto orbits = find_bouncing_orbits(scene);
  ASSERT_EQ(orbits.size(), 1u);
  const auto& orbit = orbits[0];
  EXPECT_NEAR(orbit.endpoints.first.position.x(), 1.0, 1e-12);
  EXPECT_NEAR(orbit.endpoints.first.position.y(), 0.0, 1e-12);
  EXPECT_NEAR(orbit.endpoints.second.position.x(), 2.0, 1e-12);
  EXPECT_NEAR(orbit.length, 2.0, 1e-12);
  EXPECT_NEAR(orbit.curvature.r1, 1.0, 1e-12);
  EXPECT_NEAR(orbit.curvature.rho1, 1.0, 1e-12);
  EXPECT_NEAR(orbit.c, std::sqrt(1.0 / 3.0), 1e-15);
  EXPECT_NEAR(orbit.det_factor, 12.0, 12.0 * 1e-8);
  EXPECT_NEAR(std::sqrt(orbit.det_factor), 2.0 * std::sqrt(3.0), 1e-7);
  const auto check = xi_prefactor(orbit);
  EXPECT_NEAR(check.from_coefficient, 1.0 / (2.0 * std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(check.from_poincare, 1.0 / (2.0 * std::sqrt(3.0)), 1e-7);
}

TEST(Orbits, CircleAndEllipseVertex) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Ellipse{{5.0, 0.0}, 2.0, 1.0, 0.0}});
  const auto orbits = find_bouncing_orbits(scene);
  ASSERT_EQ(orbits.size(), 1u);
  const auto& orbit = orbits[0];
  EXPECT_NEAR(orbit.endpoints.first.curvature, 1.0, 1e-10);
  EXPECT_NEAR(orbit.endpoints.second.curvature, 2.0, 1e-10);
  EXPECT_NEAR(chord_length(orbit), 2.0, 1e-10);
  EXPECT_NEAR(orbit.c, 0.5345224838248488, 1e-10);
  EXPECT_NEAR(orbit.det_factor, cavity_det(2.0, 1.0, 0.5), 1e-6 * orbit.det_factor);
}

TEST(Orbits, TwoUnitSpheres) {
  const Scene scene(3, {Sphere{{0.0, 0.0, 0.0}, 1.0}, Sphere{{0.0, 0.0, 3.0}, 1.0}});
  const auto orbits = find_bouncing_orbits(scene);
  ASSERT_EQ(orbits.size(), 1u);
  const auto& orbit = orbits[0];
  EXPECT_NEAR(dref_value(1.0, orbit.curvature), 18.0, 1e-12);
  EXPECT_NEAR(orbit.c, 1.0 / 6.0, 1e-14);
  EXPECT_NEAR(std::sqrt(orbit.det_factor), 12.0, 12.0 * 1e-7);
  const auto check = xi_prefactor(orbit);
  EXPECT_NEAR(check.from_coefficient, 1.0 / 12.0, 1e-15);
  EXPECT_LE(check.relative_gap, 1e-6);
}

TEST(Orbits, EndpointsAreAchievingPairs) {
  const std::vector<Scene> scenes = {
      Scene(2, {Circle{{0.0, 0.0}, 1.0}, Ellipse{{4.0, 1.0}, 1.5, 0.7, 0.9}}),
      Scene(2, {Ellipse{{0.0, 0.0}, 1.2, 0.6, 0.3}, Ellipse{{3.5, -0.4}, 0.9, 0.5, 2.0}}),
      Scene(3, {Sphere{{0.0, 0.0, 0.0}, 1.0}, Sphere{{3.0, -1.0, 0.5}, 0.7}}),
  };
  for (const Scene& scene : scenes) {
    const auto orbits = find_bouncing_orbits(scene);
    const auto& pairs = scene.distance().achieving_pairs;
    ASSERT_EQ(orbits.size(), pairs.size());
    for (std::size_t k = 0; k < orbits.size(); ++k) {
      EXPECT_LE((orbits[k].endpoints.first.position - pairs[k].first.position).norm(), 1e-9);
      EXPECT_LE((orbits[k].endpoints.second.position - pairs[k].second.position).norm(), 1e-9);
      EXPECT_NEAR(chord_length(orbits[k]), scene.delta(), 1e-9);
      EXPECT_LE(detail::normality_residual(orbits[k].endpoints), 1e-8);
      EXPECT_GT(orbits[k].det_factor, 0.0);
    }
  }
}

TEST(Orbits, FarThirdObstacleOnlyNonMinimal) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{3.0, 0.0}, 1.0}, Circle{{0.0, 12.0}, 1.0}});
  const auto shortest = find_bouncing_orbits(scene);
  ASSERT_EQ(shortest.size(), 1u);
  EXPECT_TRUE(shortest[0].shortest);
  const auto all = find_bouncing_orbits(scene, 1e-9, true);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_TRUE(all[0].shortest);
  for (std::size_t k = 1; k < all.size(); ++k) {
    EXPECT_FALSE(all[k].shortest);
    EXPECT_GT(all[k].length, all[0].length);
  }
}

TEST(Orbits, NonConvexEndpointIsDegenerate) {
  const Scene scene = load_scene(scene_path("star_circle.json"));
  EXPECT_THROW(find_bouncing_orbits(scene), DegeneracyError);
}

TEST(Orbits, SingleObstacleRejected) {
  EXPECT_THROW(find_bouncing_orbits(Scene(2, {Circle{{0.0, 0.0}, 1.0}})), SceneError);
}

TEST(Coefficient, ThreeDimensionalIndependentOfAngleWhenRadiiMatch) {
  CurvatureData k{0.7, 1.9, 1.3, 1.3, 0.0};
  const double base = singularity_coefficient_3d(1.4, k);
  for (double theta : {0.3, 1.1, 2.5}) {
    k.theta = theta;
    EXPECT_NEAR(singularity_coefficient_3d(1.4, k), base, 1e-15);
  }
  k = CurvatureData{0.8, 0.8, 0.5, 2.0, 0.0};
  const double other = singularity_coefficient_3d(0.9, k);
  k.theta = 0.77;
  EXPECT_NEAR(singularity_coefficient_3d(0.9, k), other, 1e-15);
}

TEST(Coefficient, ThreeDimensionalDependsOnAngleOtherwise) {
  CurvatureData k{0.7, 1.9, 1.3, 0.4, 0.0};
  const double aligned = singularity_coefficient_3d(1.0, k);
  k.theta = 0.5 * std::numbers::pi;
  EXPECT_GT(std::abs(singularity_coefficient_3d(1.0, k) - aligned), 1e-3);
}

TEST(Coefficient, SymmetricUnderSwappingEndpoints) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> radius(0.2, 4.0), gap(0.1, 5.0), angle(0.0, std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    const double d = gap(rng), r = radius(rng), rho = radius(rng);
    EXPECT_NEAR(singularity_coefficient_2d(d, r, rho), singularity_coefficient_2d(d, rho, r),
                1e-12 * singularity_coefficient_2d(d, r, rho));
    const CurvatureData k{radius(rng), radius(rng), radius(rng), radius(rng), angle(rng)};
    const CurvatureData swapped{k.rho1, k.rho2, k.r1, k.r2, k.theta};
    const double c = singularity_coefficient_3d(d, k);
    EXPECT_NEAR(singularity_coefficient_3d(d, swapped), c, 1e-12 * c);
  }
}

TEST(Coefficient, SphereIdentity) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> radius(0.5, 3.0), gap(0.5, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double d = gap(rng), r = radius(rng), rho = radius(rng);
    const CurvatureData k{r, r, rho, rho, 0.3};
    EXPECT_NEAR(dref_value(d, k), 2.0 * (d + r + rho) * (d + r + rho), 1e-12 * dref_value(d, k));
    const double prefactor = singularity_coefficient_3d(d, k) / (2.0 * d);
    EXPECT_NEAR(prefactor, r * rho / (4.0 * d * (r + rho + d)), 1e-12 * prefactor);
  }
}

TEST(Coefficient, InvalidCurvatureRejected) {
  EXPECT_THROW(singularity_coefficient_2d(1.0, -1.0, 1.0), NumericalError);
  EXPECT_THROW(singularity_coefficient_3d(1.0, CurvatureData{0.0, 1.0, 1.0, 1.0, 0.0}), NumericalError);
}

TEST(Coefficient, LargeSeparationLimit) {
  const double r = 1.3, rho = 0.6;
  for (double d : {1e3, 1e5}) {
    const double prefactor = singularity_coefficient_2d(d, r, rho) / (2.0 * d);
    EXPECT_NEAR(prefactor * d, 0.5 * std::sqrt(r * rho), 0.5 * std::sqrt(r * rho) * 2.0 * (r + rho) / d);
  }
}

TEST(Poincare, RandomCirclePairsMatchCavityFormula) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> radius(0.5, 3.0), gap(0.5, 4.0), angle(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 20; ++trial) {
    const double r1 = radius(rng), r2 = radius(rng), g = gap(rng), phi = angle(rng);
    const double d = r1 + r2 + g;
    const Scene scene(2, {Circle{{0.3, -0.2}, r1}, Circle{{0.3 + d * std::cos(phi), -0.2 + d * std::sin(phi)}, r2}});
    const auto orbits = find_bouncing_orbits(scene);
    ASSERT_EQ(orbits.size(), 1u);
    EXPECT_NEAR(orbits[0].det_factor, cavity_det(g, r1, r2), 1e-6 * orbits[0].det_factor);
    EXPECT_NO_THROW(xi_prefactor(orbits[0]));
  }
}

TEST(Poincare, RandomSpherePairsMatchCavityFormula) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> radius(0.5, 3.0), gap(0.5, 4.0), unit(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double r1 = radius(rng), r2 = radius(rng), g = gap(rng);
    const Vec3 dir = Vec3(unit(rng), unit(rng), unit(rng)).normalized();
    const Scene scene(3, {Sphere{Vec3::Zero(), r1}, Sphere{(r1 + r2 + g) * dir, r2}});
    const auto orbits = find_bouncing_orbits(scene);
    ASSERT_EQ(orbits.size(), 1u);
    const double expected = cavity_det(g, r1, r2) * cavity_det(g, r1, r2);
    EXPECT_NEAR(orbits[0].det_factor, expected, 1e-6 * expected);
    EXPECT_NO_THROW(xi_prefactor(orbits[0]));
  }
}

TEST(Poincare, ScaleInvariant) {
  const Scene small(2, {Circle{{0.0, 0.0}, 1.0}, Ellipse{{4.0, 0.5}, 1.5, 0.7, 0.4}});
  const Scene large(2, {Circle{{0.0, 0.0}, 2.0}, Ellipse{{8.0, 1.0}, 3.0, 1.4, 0.4}});
  const double a = find_bouncing_orbits(small)[0].det_factor;
  const double b = find_bouncing_orbits(large)[0].det_factor;
  EXPECT_NEAR(a, b, 1e-8 * a);
}

TEST(Poincare, EllipsePairsAgreeWithCoefficientRoute) {
  const Scene scene(2, {Ellipse{{0.0, 0.0}, 1.2, 0.6, 0.3}, Ellipse{{3.5, -0.4}, 0.9, 0.5, 2.0}});
  for (const auto& orbit : find_bouncing_orbits(scene)) {
    EXPECT_LE(xi_prefactor(orbit).relative_gap, 1e-6);
  }
}

TEST(Poincare, DisagreementReported) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{3.0, 0.0}, 1.0}});
  auto orbit = find_bouncing_orbits(scene)[0];
  orbit.det_factor *= 1.01;
  EXPECT_THROW(xi_prefactor(orbit), NumericalError);
  orbit.det_factor = 0.0;
  EXPECT_THROW(xi_prefactor(orbit), NumericalError);
}

TEST(Poincare, PredictedPrefactorSumsShortestOrbits) {
  const Scene scene = load_scene(scene_path("three_circles.json"));
  const auto orbits = find_bouncing_orbits(scene);
  ASSERT_EQ(orbits.size(), 3u);
  EXPECT_NEAR(predicted_prefactor(orbits), 3.0 / (2.0 * std::sqrt(3.0)), 1e-9);
}
