#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "relxi/geometry.hpp"

using namespace relxi;

namespace {

double total_weight(const ObstacleShape& shape, int n) {
  double sum = 0.0;
  for (const auto& s : boundary_sample(shape, n)) sum += s.weight;
  return sum;
}

// Independent star parameterization for the oracles below.
Vec2 star_point(const std::vector<double>& a, const Vec2& center, double t) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r += a[k] * std::cos(static_cast<double>(k) * t);
  return center + r * Vec2(std::cos(t), std::sin(t));
}

Vec2 point2(const BoundaryPoint& p) { return p.position.head<2>(); }

}  // namespace

TEST(BoundarySample, CirclePerimeter) {
  EXPECT_NEAR(total_weight(Circle{{0.3, -1.0}, 1.0}, 64), 2.0 * std::numbers::pi, 1e-13);
}

TEST(BoundarySample, EllipsePerimeter) {
  // 8 E(3/4), complete elliptic integral of the second kind (mpmath)
  EXPECT_NEAR(total_weight(Ellipse{{0.0, 0.0}, 2.0, 1.0, 0.4}, 128), 9.688448220547675, 1e-10);
}

TEST(BoundarySample, SphereArea) {
  EXPECT_NEAR(total_weight(Sphere{{1.0, 2.0, 3.0}, 1.0}, 24), 4.0 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(total_weight(Sphere{{0.0, 0.0, 0.0}, 2.5}, 24), 4.0 * std::numbers::pi * 6.25, 1e-11);
}

TEST(BoundarySample, SpectralConvergenceUnderDoubling) {
  const Ellipse e{{0.0, 0.0}, 2.0, 1.0, 0.0};
  const double exact = 9.688448220547675;
  const double e16 = std::abs(total_weight(e, 16) - exact);
  const double e32 = std::abs(total_weight(e, 32) - exact);
  const double e64 = std::abs(total_weight(e, 64) - exact);
  EXPECT_LT(e32, 1e-3 * e16);
  EXPECT_LT(e64, 1e-11);
}

TEST(BoundarySample, RejectsBadSizes) {
  EXPECT_THROW(boundary_sample(Circle{}, 8), ConfigError);
  EXPECT_THROW(boundary_sample(Circle{}, 33), ConfigError);
  EXPECT_THROW(boundary_sample(Sphere{}, 1), ConfigError);
}

TEST(Curvature, Circle) {
  for (double t : {0.0, 1.3, 4.0}) EXPECT_NEAR(curvature_at(Circle{{1.0, 1.0}, 2.0}, t).curvature, 0.5, 1e-15);
}

TEST(Curvature, EllipseVertex) {
  EXPECT_NEAR(curvature_at(Ellipse{{0.0, 0.0}, 2.0, 1.0, 0.0}, 0.0).curvature, 2.0, 1e-14);
  EXPECT_NEAR(curvature_at(Ellipse{{0.0, 0.0}, 2.0, 1.0, 0.0}, std::numbers::pi / 2).curvature, 0.25, 1e-14);
}

TEST(Curvature, StarMatchesFiniteDifferenceOfTangentAngle) {
  const std::vector<double> a{1.0, 0.0, 0.0, 0.2};
  const Star star{{0.0, 0.0}, a, 0.0};
  // tangent from the analytic derivative of the parameterization
  auto tangent = [&](double s) {
    double r = 0.0, dr = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      r += a[k] * std::cos(static_cast<double>(k) * s);
      dr -= static_cast<double>(k) * a[k] * std::sin(static_cast<double>(k) * s);
    }
    return Vec2(dr * std::cos(s) - r * std::sin(s), dr * std::sin(s) + r * std::cos(s));
  };
  auto angle = [&](double s) { return std::atan2(tangent(s).y(), tangent(s).x()); };
  auto central = [&](double t, double h) {
    return std::remainder(angle(t + h) - angle(t - h), 2.0 * std::numbers::pi) / (2.0 * h);
  };
  for (double t : {0.0, 0.4, 1.0472, 2.5}) {
    const double h = 1e-3;
    const double dtheta = (4.0 * central(t, h / 2) - central(t, h)) / 3.0;
    EXPECT_NEAR(curvature_at(star, t).curvature, dtheta / tangent(t).norm(), 1e-8) << "t=" << t;
  }
}

TEST(Curvature, SpherePrincipalCurvatures) {
  const auto p = curvature_at(Sphere{{0.0, 0.0, 0.0}, 4.0}, std::array<double, 2>{0.7, 2.0});
  EXPECT_NEAR(p.principal_curvatures[0], 0.25, 1e-15);
  EXPECT_NEAR(p.principal_curvatures[1], 0.25, 1e-15);
  EXPECT_NEAR(p.unit_normal.dot(p.position), 4.0, 1e-14);
  EXPECT_NEAR(p.principal_directions[0].dot(p.unit_normal), 0.0, 1e-15);
  EXPECT_NEAR(p.principal_directions[1].dot(p.principal_directions[0]), 0.0, 1e-15);
}

TEST(Curvature, NormalsPointOutward) {
  const Star star{{1.0, -2.0}, {1.0, 0.1, 0.0, 0.15}, 0.3};
  for (int k = 0; k < 32; ++k) {
    const auto p = curvature_at(star, 2.0 * std::numbers::pi * k / 32);
    EXPECT_GT(p.unit_normal.dot(p.position - Vec3(1.0, -2.0, 0.0)), 0.0);
    EXPECT_NEAR(p.unit_normal.norm(), 1.0, 1e-14);
  }
}

TEST(MinDistance, TwoCircles) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{3.0, 0.0}, 1.0}});
  const auto& d = scene.distance();
  EXPECT_NEAR(d.delta, 1.0, 1e-14);
  ASSERT_EQ(d.achieving_pairs.size(), 1u);
  EXPECT_LT((point2(d.achieving_pairs[0].first) - Vec2(1.0, 0.0)).norm(), 1e-12);
  EXPECT_LT((point2(d.achieving_pairs[0].second) - Vec2(2.0, 0.0)).norm(), 1e-12);
}

TEST(MinDistance, CircleEllipse) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Ellipse{{5.0, 0.0}, 2.0, 1.0, 0.0}});
  const auto& d = scene.distance();
  EXPECT_NEAR(d.delta, 2.0, 1e-12);
  ASSERT_EQ(d.achieving_pairs.size(), 1u);
  EXPECT_LT((point2(d.achieving_pairs[0].first) - Vec2(1.0, 0.0)).norm(), 1e-9);
  EXPECT_LT((point2(d.achieving_pairs[0].second) - Vec2(3.0, 0.0)).norm(), 1e-9);
}

TEST(MinDistance, StarCircleMatchesGridScan) {
  const std::vector<double> a{1.0, 0.1, 0.0, 0.2};
  const Vec2 star_center(0.0, 0.0), circle_center(2.9, 1.1);
  const double radius = 0.8;
  const Scene scene(2, {Star{star_center, a, 0.0}, Circle{circle_center, radius}});

  // 2000 x 2000 scan of the parameter torus, then a 200 x 200 scan around the best cell
  auto dist = [&](double s, double t) {
    return (star_point(a, star_center, s) - (circle_center + radius * Vec2(std::cos(t), std::sin(t)))).norm();
  };
  constexpr int kGrid = 2000;
  const double h = 2.0 * std::numbers::pi / kGrid;
  double best = INFINITY, bs = 0.0, bt = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double d = dist(i * h, j * h);
      if (d < best) {
        best = d;
        bs = i * h;
        bt = j * h;
      }
    }
  }
  const double s0 = bs, t0 = bt;
  for (int i = -100; i <= 100; ++i) {
    for (int j = -100; j <= 100; ++j) best = std::min(best, dist(s0 + i * h / 50.0, t0 + j * h / 50.0));
  }
  EXPECT_NEAR(scene.delta(), best, 1e-6);
  EXPECT_LE(scene.delta(), best + 1e-12);
}

TEST(MinDistance, SpherePairClosedForm) {
  const Scene scene(3, {Sphere{{0.0, 0.0, 0.0}, 1.0}, Sphere{{1.0, 2.0, 2.0}, 0.5}});
  EXPECT_NEAR(scene.delta(), 3.0 - 1.5, 1e-14);
  const auto& pair = scene.distance().achieving_pairs.at(0);
  EXPECT_NEAR((pair.first.position - pair.second.position).norm(), 1.5, 1e-12);
  EXPECT_NEAR(pair.first.position.norm(), 1.0, 1e-14);
}

TEST(MinDistance, NormalityOfAchievingPairs) {
  const std::vector<Scene> scenes = {
      Scene(2, {Circle{{0.0, 0.0}, 1.0}, Ellipse{{4.0, 1.0}, 1.5, 0.7, 0.9}}),
      Scene(2, {Star{{0.0, 0.0}, {1.0, 0.1, 0.0, 0.2}, 0.0}, Circle{{2.9, 1.1}, 0.8}}),
      Scene(3, {Sphere{{0.0, 0.0, 0.0}, 1.0}, Sphere{{3.0, -1.0, 0.5}, 0.7}}),
  };
  for (const auto& scene : scenes) {
    for (const auto& p : scene.distance().achieving_pairs) {
      const Vec3 chord = (p.second.position - p.first.position).normalized();
      EXPECT_LE((chord - p.first.unit_normal).norm(), 1e-8);
      EXPECT_LE((chord + p.second.unit_normal).norm(), 1e-8);
    }
  }
}

TEST(MinDistance, SymmetricAndRigidMotionInvariant) {
  const std::vector<ObstacleShape> obstacles = {Ellipse{{0.0, 0.0}, 1.3, 0.6, 0.2},
                                                Star{{3.5, 0.4}, {1.0, 0.0, 0.12, 0.0, 0.05}, 0.0}};
  const Scene scene(2, obstacles);
  const Scene reversed(2, {obstacles[1], obstacles[0]});
  const Scene moved = transformed(scene, 1.1, Vec3(-2.0, 5.0, 0.0));
  EXPECT_NEAR(reversed.delta(), scene.delta(), 1e-12);
  EXPECT_NEAR(moved.delta(), scene.delta(), 1e-12);
}

TEST(MinDistance, ThreeObstaclesPickClosestPair) {
  const Scene scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{3.0, 0.0}, 1.0}, Circle{{0.0, 10.0}, 1.0}});
  EXPECT_NEAR(scene.delta(), 1.0, 1e-14);
  ASSERT_EQ(scene.distance().achieving_pairs.size(), 1u);
  EXPECT_EQ(scene.distance().achieving_pairs[0].first.obstacle_index, 0);
  EXPECT_EQ(scene.distance().achieving_pairs[0].second.obstacle_index, 1);
}

TEST(Scene, RejectsInvalidInput) {
  EXPECT_THROW(Scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{1.5, 0.0}, 1.0}}), SceneError);
  EXPECT_THROW(Scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{0.2, 0.0}, 0.3}}), SceneError);
  EXPECT_THROW(Scene(2, {Circle{{0.0, 0.0}, 1.0}, Circle{{2.0, 0.0}, 1.0}}), SceneError);
  EXPECT_THROW(Scene(3, {Sphere{{0.0, 0.0, 0.0}, 1.0}, Sphere{{1.0, 0.0, 0.0}, 1.0}}), SceneError);
  EXPECT_THROW(Scene(2, {Circle{}, Sphere{{5.0, 0.0, 0.0}, 1.0}}), SceneError);
  EXPECT_THROW(Scene(4, {Circle{}}), SceneError);
  EXPECT_THROW(Scene(2, {Circle{{0.0, 0.0}, -1.0}}), SceneError);
  EXPECT_THROW(Scene(2, {Ellipse{{0.0, 0.0}, 1.0, 0.0, 0.0}}), SceneError);
  EXPECT_THROW(Scene(2, {Star{{0.0, 0.0}, {0.5, 0.6}, 0.0}}), SceneError);
  EXPECT_THROW(Scene(2, {Star{{0.0, 0.0}, std::vector<double>(18, 0.01), 0.0}}), SceneError);
  EXPECT_THROW(Scene(2, {Circle{}}).delta(), SceneError);
}
