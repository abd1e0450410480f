#pragma once

// Two-link periodic billiard trajectories (bouncing-ball orbits) between
// pairs of obstacles, their curvature invariants, and the linearized
// return map.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "relxi/error.hpp"
#include "relxi/geometry.hpp"

namespace relxi {

/// Radii of principal curvature at the two reflection points. In 2D only
/// r1 (first point) and rho1 (second point) are used.
struct CurvatureData {
  double r1 = 0.0, r2 = 0.0;
  double rho1 = 0.0, rho2 = 0.0;
  double theta = 0.0;  // angle between the first principal directions (3D)
};

struct BouncingBallOrbit {
  ClosestPair endpoints;
  int dimension = 2;
  double length = 0.0;  // twice the chord
  bool shortest = true;
  CurvatureData curvature;
  double c = 0.0;           // singularity coefficient
  double det_factor = 0.0;  // |det(I - P)| from the numerical return map
};

/// Half of the orbit length.
inline double chord_length(const BouncingBallOrbit& orbit) { return 0.5 * orbit.length; }

/// c = sqrt(delta r rho / (r + rho + delta)).
inline double singularity_coefficient_2d(double delta, double r, double rho) {
  const double radicand = delta * r * rho / (r + rho + delta);
  if (!(radicand > 0.0)) throw NumericalError("singularity_coefficient: non-positive radicand (invalid curvature data)");
  return std::sqrt(radicand);
}

/// The quantity D entering the three-dimensional coefficient.
inline double dref_value(double delta, const CurvatureData& k) {
  const double d = delta;
  return 2.0 * d * d + 2.0 * d * k.rho1 + 2.0 * d * k.rho2 + 2.0 * k.rho1 * k.rho2 +
         k.r1 * (2.0 * d + k.rho1 + k.rho2 + 2.0 * k.r2) + 2.0 * d * k.r2 -
         (k.rho1 - k.rho2) * (k.r1 - k.r2) * std::cos(2.0 * k.theta) + k.rho1 * k.r2 + k.rho2 * k.r2;
}

/// c = sqrt(rho1 rho2 r1 r2 / (2 D)).
inline double singularity_coefficient_3d(double delta, const CurvatureData& k) {
  const double radicand = k.rho1 * k.rho2 * k.r1 * k.r2 / (2.0 * dref_value(delta, k));
  if (!(radicand > 0.0)) throw NumericalError("singularity_coefficient: non-positive radicand (invalid curvature data)");
  return std::sqrt(radicand);
}

inline double singularity_coefficient(const BouncingBallOrbit& orbit) {
  const double delta = chord_length(orbit);
  if (orbit.dimension == 2) return singularity_coefficient_2d(delta, orbit.curvature.r1, orbit.curvature.rho1);
  return singularity_coefficient_3d(delta, orbit.curvature);
}

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct PlanarHit {
  double parameter;
  double momentum;  // tangential component of the reflected direction
};

// Leave `from` at parameter t with tangential momentum u, hit `to` (Newton on
// its parameter starting at `guess`) and reflect.
inline PlanarHit planar_bounce(const ObstacleShape& from, double t, double u, const ObstacleShape& to,
                               double guess) {
  if (!(std::abs(u) < 1.0)) throw NumericalError("poincare map: grazing direction (|u| >= 1)");
  const CurveJet j = curve_jet(from, t);
  const Vec2 tangent = j.dx.normalized();
  const Vec2 normal = outward_normal(j);
  const Vec2 v = u * tangent + std::sqrt(1.0 - u * u) * normal;
  double s = guess;
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const CurveJet k = curve_jet(to, s);
    const double g = cross2(k.x - j.x, v);
    const double dg = cross2(k.dx, v);
    if (dg == 0.0) break;
    const double step = g / dg;
    s -= step;
    if (std::abs(step) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) {
      converged = true;
      break;
    }
  }
  const CurveJet k = curve_jet(to, s);
  const Vec2 nk = outward_normal(k);
  if (!converged || !((k.x - j.x).dot(v) > 0.0) || !(v.dot(nk) < 0.0)) {
    throw NumericalError("poincare map: ray tracing failed to reach the partner obstacle");
  }
  const Vec2 out = v - 2.0 * v.dot(nk) * nk;
  const double u_out = out.dot(k.dx.normalized());
  if (!(std::abs(u_out) < 1.0)) throw NumericalError("poincare map: grazing reflection (|u| >= 1)");
  return {s, u_out};
}

inline std::optional<double> ray_sphere(const Vec3& origin, const Vec3& dir, const Sphere& s) {
  const Vec3 oc = origin - s.center;
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (!(disc > 0.0)) return std::nullopt;
  const double root = -b - std::sqrt(disc);
  if (!(root > 0.0)) return std::nullopt;
  return root;
}

// Local chart on a sphere around base point p0: position from gnomonic
// offsets xi (length units), momentum as components in a projected frame.
struct SphereChart {
  Sphere sphere;
  Vec3 normal0, a, b;

  Vec3 position(double x1, double x2) const {
    const Vec3 w = (normal0 + (x1 * a + x2 * b) / sphere.radius).normalized();
    return sphere.center + sphere.radius * w;
  }
  std::pair<Vec3, Vec3> frame(const Vec3& p) const {
    const Vec3 n = (p - sphere.center).normalized();
    const Vec3 e1 = (a - a.dot(n) * n).normalized();
    return {e1, n.cross(e1)};
  }
  std::array<double, 2> coordinates(const Vec3& p) const {
    const Vec3 w = (p - sphere.center).normalized();
    const double denom = w.dot(normal0);
    return {sphere.radius * w.dot(a) / denom, sphere.radius * w.dot(b) / denom};
  }
};

template <class Map>
Eigen::MatrixXd central_jacobian(const Map& map, const Eigen::VectorXd& x0, const Eigen::VectorXd& steps) {
  const Eigen::Index n = x0.size();
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp(k) += steps(k);
    xm(k) -= steps(k);
    jac.col(k) = (map(xp) - map(xm)) / (2.0 * steps(k));
  }
  return jac;
}

template <class Map>
double det_i_minus_jacobian(const Map& map, const Eigen::VectorXd& x0, const Eigen::VectorXd& steps) {
  const Eigen::MatrixXd coarse = central_jacobian(map, x0, steps);
  const Eigen::MatrixXd fine = central_jacobian(map, x0, 0.5 * steps);
  const Eigen::MatrixXd jac = (4.0 * fine - coarse) / 3.0;
  const Eigen::Index n = x0.size();
  return std::abs((Eigen::MatrixXd::Identity(n, n) - jac).determinant());
}

}  // namespace detail

/// |det(I - P)| of the two-bounce return map, by central differences with
/// position step h (momentum step h / chord) and one Richardson level.
/// h <= 0 selects 1e-5 times the chord length.
inline double poincare_det_numeric(const Scene& scene, const BouncingBallOrbit& orbit, double h = 0.0) {
  const double chord = chord_length(orbit);
  if (h <= 0.0) h = 1e-5 * chord;
  const int ia = orbit.endpoints.first.obstacle_index;
  const int ib = orbit.endpoints.second.obstacle_index;
  const ObstacleShape& a = scene.obstacle(ia);
  const ObstacleShape& b = scene.obstacle(ib);

  if (scene.dimension() == 2) {
    const double t0 = orbit.endpoints.first.parameter[0];
    const double s0 = orbit.endpoints.second.parameter[0];
    auto map = [&](const Eigen::VectorXd& state) {
      const auto hit = detail::planar_bounce(a, state(0), state(1), b, s0);
      const auto back = detail::planar_bounce(b, hit.parameter, hit.momentum, a, t0);
      Eigen::VectorXd out(2);
      out << back.parameter, back.momentum;
      return out;
    };
    Eigen::VectorXd x0(2), steps(2);
    x0 << t0, 0.0;
    steps << h / curve_jet(a, t0).dx.norm(), h / chord;
    return detail::det_i_minus_jacobian(map, x0, steps);
  }

  const auto* sa = std::get_if<Sphere>(&a);
  const auto* sb = std::get_if<Sphere>(&b);
  if (!sa || !sb) throw SceneError("poincare_det_numeric: 3D scenes must consist of spheres");
  const BoundaryPoint& p0 = orbit.endpoints.first;
  const detail::SphereChart chart{*sa, p0.unit_normal, p0.principal_directions[0],
                                  p0.unit_normal.cross(p0.principal_directions[0])};
  auto map = [&](const Eigen::VectorXd& state) {
    const Vec3 p = chart.position(state(0), state(1));
    const auto [e1, e2] = chart.frame(p);
    const Vec3 n = (p - sa->center).normalized();
    const double uu = state(2) * state(2) + state(3) * state(3);
    if (!(uu < 1.0)) throw NumericalError("poincare map: grazing direction (|u| >= 1)");
    Vec3 v = state(2) * e1 + state(3) * e2 + std::sqrt(1.0 - uu) * n;
    const auto d1 = detail::ray_sphere(p, v, *sb);
    if (!d1) throw NumericalError("poincare map: ray misses the partner sphere");
    const Vec3 q = p + *d1 * v;
    const Vec3 nq = (q - sb->center).normalized();
    v -= 2.0 * v.dot(nq) * nq;
    const auto d2 = detail::ray_sphere(q, v, *sa);
    if (!d2) throw NumericalError("poincare map: return ray misses the first sphere");
    const Vec3 p2 = q + *d2 * v;
    const Vec3 n2 = (p2 - sa->center).normalized();
    v -= 2.0 * v.dot(n2) * n2;
    const auto [f1, f2] = chart.frame(p2);
    const auto xi = chart.coordinates(p2);
    Eigen::VectorXd out(4);
    out << xi[0], xi[1], v.dot(f1), v.dot(f2);
    return out;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4), steps(4);
  steps << h, h, h / chord, h / chord;
  return detail::det_i_minus_jacobian(map, x0, steps);
}

namespace detail {

inline CurvatureData orbit_curvature(int dimension, const ClosestPair& pair) {
  CurvatureData k;
  const BoundaryPoint& p = pair.first;
  const BoundaryPoint& q = pair.second;
  if (dimension == 2) {
    if (!(p.curvature > 0.0) || !(q.curvature > 0.0)) {
      throw DegeneracyError("find_bouncing_orbits: boundary not strictly convex at an orbit endpoint");
    }
    k.r1 = 1.0 / p.curvature;
    k.rho1 = 1.0 / q.curvature;
    return k;
  }
  for (double kv : {p.principal_curvatures[0], p.principal_curvatures[1], q.principal_curvatures[0],
                    q.principal_curvatures[1]}) {
    if (!(kv > 0.0)) {
      throw DegeneracyError("find_bouncing_orbits: boundary not strictly convex at an orbit endpoint");
    }
  }
  k.r1 = 1.0 / p.principal_curvatures[0];
  k.r2 = 1.0 / p.principal_curvatures[1];
  k.rho1 = 1.0 / q.principal_curvatures[0];
  k.rho2 = 1.0 / q.principal_curvatures[1];
  // Both tangent planes are orthogonal to the chord, so the first principal
  // directions can be compared directly after projection onto that plane.
  const Vec3 axis = (q.position - p.position).normalized();
  const Vec3 d1 = (p.principal_directions[0] - p.principal_directions[0].dot(axis) * axis).normalized();
  const Vec3 d2 = (q.principal_directions[0] - q.principal_directions[0].dot(axis) * axis).normalized();
  k.theta = std::atan2(d1.cross(d2).dot(axis), d1.dot(d2));
  return k;
}

inline double normality_residual(const ClosestPair& pair) {
  const Vec3 chord = (pair.second.position - pair.first.position).normalized();
  return std::max((chord - pair.first.unit_normal).norm(), (chord + pair.second.unit_normal).norm());
}

}  // namespace detail

/// Bouncing-ball orbits of the scene. With include_nonminimal, every local
/// minimum of every pair distance is reported, not only those at delta.
inline std::vector<BouncingBallOrbit> find_bouncing_orbits(const Scene& scene, double tol = 1e-9,
                                                           bool include_nonminimal = false) {
  if (scene.size() < 2) throw SceneError("find_bouncing_orbits: need at least two obstacles");
  const double delta = scene.delta();
  std::vector<BouncingBallOrbit> orbits;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.size(); ++j) {
      const auto minima =
          pair_minima(scene.obstacle(i), scene.obstacle(j), static_cast<int>(i), static_cast<int>(j));
      for (const ClosestPair& pair : minima) {
        const bool shortest = pair.distance <= delta + tol;
        if (!shortest && !include_nonminimal) continue;
        if (detail::normality_residual(pair) > 1e-8) {
          throw NumericalError("find_bouncing_orbits: chord is not normal to both boundaries");
        }
        BouncingBallOrbit orbit;
        orbit.endpoints = pair;
        orbit.dimension = scene.dimension();
        orbit.length = 2.0 * pair.distance;
        orbit.shortest = shortest;
        orbit.curvature = detail::orbit_curvature(scene.dimension(), pair);
        orbit.c = singularity_coefficient(orbit);
        orbit.det_factor = poincare_det_numeric(scene, orbit);
        orbits.push_back(orbit);
      }
    }
  }
  if (orbits.empty()) throw NumericalError("find_bouncing_orbits: no orbit found");
  std::stable_sort(orbits.begin(), orbits.end(),
                   [](const auto& x, const auto& y) { return x.length < y.length; });
  return orbits;
}

struct PrefactorCheck {
  double from_poincare = 0.0;     // 1 / |det(I - P)|^{1/2}
  double from_coefficient = 0.0;  // c / (2 delta)
  double relative_gap = 0.0;
};

/// 1 / |det(I - P)|^{1/2} by two routes; they must agree to 1e-6.
inline PrefactorCheck xi_prefactor(const BouncingBallOrbit& orbit, double tolerance = 1e-6) {
  PrefactorCheck out;
  if (!(orbit.det_factor > 0.0)) throw NumericalError("xi_prefactor: degenerate return map (det = 0)");
  out.from_poincare = 1.0 / std::sqrt(orbit.det_factor);
  out.from_coefficient = orbit.c / (2.0 * chord_length(orbit));
  out.relative_gap = std::abs(out.from_poincare - out.from_coefficient) / out.from_coefficient;
  if (!(out.relative_gap <= tolerance)) {
    throw NumericalError("xi_prefactor: Poincare route " + std::to_string(out.from_poincare) +
                         " disagrees with curvature route " + std::to_string(out.from_coefficient));
  }
  return out;
}

/// Sum of xi_prefactor over the shortest orbits.
inline double predicted_prefactor(const std::vector<BouncingBallOrbit>& orbits) {
  double sum = 0.0;
  for (const auto& o : orbits) {
    if (o.shortest) sum += o.c / (2.0 * chord_length(o));
  }
  return sum;
}

}  // namespace relxi
