#pragma once

// Obstacle scenes: a closed catalog of analytic shapes (circle, ellipse,
// star-shaped curve, sphere), their parameterizations, curvature data,
// boundary quadrature, and the minimal inter-obstacle distance.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relxi/error.hpp"

namespace relxi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr int kMaxStarHarmonic = 16;

struct Circle {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
};

struct Ellipse {
  Vec2 center{0.0, 0.0};
  double semi_major = 1.0;  // along the rotated x axis
  double semi_minor = 1.0;  // along the rotated y axis
  double rotation = 0.0;
};

/// Star-shaped curve with radius(t) = a0 + sum_k a_k cos(k t), k <= 16.
struct Star {
  Vec2 center{0.0, 0.0};
  std::vector<double> cosine_coefficients{1.0};
  double rotation = 0.0;  // radius is evaluated at t - rotation
};

struct Sphere {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;
};

using ObstacleShape = std::variant<Circle, Ellipse, Star, Sphere>;

inline int shape_dimension(const ObstacleShape& shape) {
  return std::holds_alternative<Sphere>(shape) ? 3 : 2;
}

inline std::string shape_kind(const ObstacleShape& shape) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle>) return "circle";
        if constexpr (std::is_same_v<S, Ellipse>) return "ellipse";
        if constexpr (std::is_same_v<S, Star>) return "star";
        if constexpr (std::is_same_v<S, Sphere>) return "sphere";
      },
      shape);
}

/// A point on an obstacle boundary with its local differential geometry.
/// In 2D the z components are zero and only `curvature` is meaningful.
struct BoundaryPoint {
  int obstacle_index = -1;
  std::array<double, 2> parameter{0.0, 0.0};  // t in 2D; (polar, azimuth) in 3D
  Vec3 position = Vec3::Zero();
  Vec3 unit_normal = Vec3::Zero();  // outward
  double curvature = 0.0;           // 2D, positive where convex
  std::array<double, 2> principal_curvatures{0.0, 0.0};
  std::array<Vec3, 2> principal_directions{Vec3::Zero(), Vec3::Zero()};
};

/// Position and first two derivatives of a planar curve at parameter t.
struct CurveJet {
  Vec2 x, dx, ddx;
};

namespace detail {

inline CurveJet circle_jet(const Circle& c, double t) {
  const double ct = std::cos(t), st = std::sin(t), r = c.radius;
  return {c.center + r * Vec2(ct, st), r * Vec2(-st, ct), -r * Vec2(ct, st)};
}

inline CurveJet ellipse_jet(const Ellipse& e, double t) {
  const double ct = std::cos(t), st = std::sin(t);
  const double cr = std::cos(e.rotation), sr = std::sin(e.rotation);
  Eigen::Matrix2d rot;
  rot << cr, -sr, sr, cr;
  const Vec2 p(e.semi_major * ct, e.semi_minor * st);
  const Vec2 dp(-e.semi_major * st, e.semi_minor * ct);
  return {e.center + rot * p, rot * dp, -(rot * p)};
}

inline std::array<double, 3> star_radius(const Star& s, double t) {
  double r = 0.0, dr = 0.0, ddr = 0.0;
  for (std::size_t k = 0; k < s.cosine_coefficients.size(); ++k) {
    const double a = s.cosine_coefficients[k];
    const double kk = static_cast<double>(k);
    const double ck = std::cos(kk * (t - s.rotation)), sk = std::sin(kk * (t - s.rotation));
    r += a * ck;
    dr -= a * kk * sk;
    ddr -= a * kk * kk * ck;
  }
  return {r, dr, ddr};
}

inline CurveJet star_jet(const Star& s, double t) {
  const auto [r, dr, ddr] = star_radius(s, t);
  const Vec2 u(std::cos(t), std::sin(t));
  const Vec2 v(-std::sin(t), std::cos(t));
  return {s.center + r * u, dr * u + r * v, ddr * u + 2.0 * dr * v - r * u};
}

}  // namespace detail

/// Jet of a planar shape. Throws for spheres.
inline CurveJet curve_jet(const ObstacleShape& shape, double t) {
  if (const auto* c = std::get_if<Circle>(&shape)) return detail::circle_jet(*c, t);
  if (const auto* e = std::get_if<Ellipse>(&shape)) return detail::ellipse_jet(*e, t);
  if (const auto* s = std::get_if<Star>(&shape)) return detail::star_jet(*s, t);
  throw ConfigError("curve_jet: sphere is not a planar curve");
}

inline double signed_curvature(const CurveJet& j) {
  const double speed = j.dx.norm();
  return (j.dx.x() * j.ddx.y() - j.dx.y() * j.ddx.x()) / (speed * speed * speed);
}

inline Vec2 outward_normal(const CurveJet& j) {
  return Vec2(j.dx.y(), -j.dx.x()).normalized();
}

inline Vec3 sphere_point(const Sphere& s, double polar, double azimuth) {
  return s.center + s.radius * Vec3(std::sin(polar) * std::cos(azimuth),
                                    std::sin(polar) * std::sin(azimuth), std::cos(polar));
}

/// Curvature data at a boundary parameter. For spheres, parameter = (polar, azimuth).
inline BoundaryPoint curvature_at(const ObstacleShape& shape, std::array<double, 2> parameter,
                                  int obstacle_index = -1) {
  BoundaryPoint p;
  p.obstacle_index = obstacle_index;
  p.parameter = parameter;
  if (const auto* s = std::get_if<Sphere>(&shape)) {
    const double th = parameter[0], ph = parameter[1];
    if (!(th >= 0.0 && th <= std::numbers::pi)) {
      throw DomainError("curvature_at: polar angle outside [0, pi]");
    }
    const Vec3 n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
    p.position = s->center + s->radius * n;
    p.unit_normal = n;
    const double k = 1.0 / s->radius;
    p.principal_curvatures = {k, k};
    // Any orthonormal tangent pair is principal on a sphere.
    Vec3 e1(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th));
    p.principal_directions = {e1, n.cross(e1)};
    p.curvature = k;
    return p;
  }
  const CurveJet j = curve_jet(shape, parameter[0]);
  const Vec2 n = outward_normal(j);
  const Vec2 tangent = j.dx.normalized();
  p.position = Vec3(j.x.x(), j.x.y(), 0.0);
  p.unit_normal = Vec3(n.x(), n.y(), 0.0);
  p.curvature = signed_curvature(j);
  p.principal_curvatures = {p.curvature, 0.0};
  p.principal_directions = {Vec3(tangent.x(), tangent.y(), 0.0), Vec3::UnitZ()};
  return p;
}

inline BoundaryPoint curvature_at(const ObstacleShape& shape, double t, int obstacle_index = -1) {
  return curvature_at(shape, std::array<double, 2>{t, 0.0}, obstacle_index);
}

/// Validates shape parameters; throws SceneError.
inline void validate_shape(const ObstacleShape& shape) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circle> || std::is_same_v<S, Sphere>) {
          if (!(s.radius > 0.0) || !std::isfinite(s.radius)) {
            throw SceneError("radius must be positive");
          }
        } else if constexpr (std::is_same_v<S, Ellipse>) {
          if (!(s.semi_major > 0.0) || !(s.semi_minor > 0.0)) {
            throw SceneError("ellipse semi-axes must be positive");
          }
        } else {
          if (s.cosine_coefficients.empty() ||
              s.cosine_coefficients.size() > static_cast<std::size_t>(kMaxStarHarmonic + 1)) {
            throw SceneError("star needs between 1 and 17 cosine coefficients");
          }
          constexpr int kScan = 4096;
          for (int i = 0; i < kScan; ++i) {
            if (!(detail::star_radius(s, kTwoPi * i / kScan)[0] > 0.0)) {
              throw SceneError("star radius(t) must stay positive");
            }
          }
        }
      },
      shape);
}

struct BoundarySample {
  BoundaryPoint point;
  double weight = 0.0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Legendre P_n and its derivative by the three-term recurrence.
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    nodes[i] = x;
    nodes[n - 1 - i] = -x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

/// Quadrature nodes with arc-length (2D) or area (3D) weights.
/// 2D: n uniform parameter nodes, n >= 16 and even. Spheres: n is the number
/// of Gauss-Legendre polar nodes, combined with 2n uniform azimuthal nodes.
inline std::vector<BoundarySample> boundary_sample(const ObstacleShape& shape, int n) {
  std::vector<BoundarySample> out;
  if (const auto* s = std::get_if<Sphere>(&shape)) {
    if (n < 2) throw ConfigError("boundary_sample: sphere needs at least 2 polar nodes");
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const int n_az = 2 * n;
    out.reserve(static_cast<std::size_t>(n) * n_az);
    for (int i = 0; i < n; ++i) {
      const double polar = std::acos(x[i]);
      for (int k = 0; k < n_az; ++k) {
        const double az = kTwoPi * k / n_az;
        out.push_back({curvature_at(shape, std::array<double, 2>{polar, az}),
                       s->radius * s->radius * w[i] * kTwoPi / n_az});
      }
    }
    return out;
  }
  if (n < 16 || n % 2 != 0) {
    throw ConfigError("boundary_sample: n must be even and >= 16, got " + std::to_string(n));
  }
  out.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double t = kTwoPi * j / n;
    const CurveJet jet = curve_jet(shape, t);
    out.push_back({curvature_at(shape, t), kTwoPi / n * jet.dx.norm()});
  }
  return out;
}

/// A pair of boundary points realizing a (local) minimum of the distance
/// between two obstacles.
struct ClosestPair {
  BoundaryPoint first;
  BoundaryPoint second;
  double distance = 0.0;
};

struct DistanceResult {
  double delta = 0.0;
  std::vector<ClosestPair> achieving_pairs;
};

namespace detail {

inline double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

inline double angle_gap(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

struct PairMinimum {
  double s = 0.0, t = 0.0, distance = 0.0;
  double hessian_condition = 1.0;
};

// Newton iteration on the gradient of f(s,t) = |x(s) - y(t)|^2 / 2 with
// backtracking; angles are wrapped back onto [0, 2pi) after every step.
inline std::optional<PairMinimum> newton_pair(const ObstacleShape& a, const ObstacleShape& b,
                                              double s, double t) {
  auto value = [&](double ss, double tt) {
    return 0.5 * (curve_jet(a, ss).x - curve_jet(b, tt).x).squaredNorm();
  };
  for (int iter = 0; iter < 200; ++iter) {
    const CurveJet ja = curve_jet(a, s), jb = curve_jet(b, t);
    const Vec2 d = ja.x - jb.x;
    const Vec2 grad(d.dot(ja.dx), -d.dot(jb.dx));
    Eigen::Matrix2d hess;
    hess(0, 0) = ja.dx.squaredNorm() + d.dot(ja.ddx);
    hess(1, 1) = jb.dx.squaredNorm() - d.dot(jb.ddx);
    hess(0, 1) = hess(1, 0) = -ja.dx.dot(jb.dx);
    const double scale = ja.dx.norm() * jb.dx.norm() + d.norm() * (ja.dx.norm() + jb.dx.norm());
    if (grad.norm() <= 1e-15 * std::max(scale, 1.0)) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(hess);
      const auto ev = es.eigenvalues();
      if (ev(0) < 0.0) return std::nullopt;  // saddle or maximum
      PairMinimum m{wrap_angle(s), wrap_angle(t), d.norm(),
                    ev(0) > 0.0 ? ev(1) / ev(0) : std::numeric_limits<double>::infinity()};
      return m;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(hess);
    Vec2 step;
    if (es.eigenvalues()(0) > 1e-12 * std::abs(es.eigenvalues()(1))) {
      step = -hess.ldlt().solve(grad);
    } else {
      step = -grad / std::max(std::abs(es.eigenvalues()(1)), 1e-12);
    }
    const double f0 = value(s, t);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const double f1 = value(s + alpha * step.x(), t + alpha * step.y());
      if (f1 <= f0 + 1e-4 * alpha * grad.dot(step) || std::abs(f1 - f0) <= 1e-16 * f0) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return std::nullopt;
    s = wrap_angle(s + alpha * step.x());
    t = wrap_angle(t + alpha * step.y());
    if (alpha * step.norm() < 1e-16) {
      // Stalled at roundoff level; accept if the gradient is tiny relative to scale.
      if (grad.norm() <= 1e-10 * std::max(scale, 1.0)) continue;
      return std::nullopt;
    }
  }
  // Final acceptance test after the iteration budget.
  const CurveJet ja = curve_jet(a, s), jb = curve_jet(b, t);
  const Vec2 d = ja.x - jb.x;
  const Vec2 grad(d.dot(ja.dx), -d.dot(jb.dx));
  if (grad.norm() > 1e-9) return std::nullopt;
  Eigen::Matrix2d hess;
  hess(0, 0) = ja.dx.squaredNorm() + d.dot(ja.ddx);
  hess(1, 1) = jb.dx.squaredNorm() - d.dot(jb.ddx);
  hess(0, 1) = hess(1, 0) = -ja.dx.dot(jb.dx);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(hess);
  const auto ev = es.eigenvalues();
  if (ev(0) < 0.0) return std::nullopt;
  return PairMinimum{wrap_angle(s), wrap_angle(t), d.norm(),
                     ev(0) > 0.0 ? ev(1) / ev(0) : std::numeric_limits<double>::infinity()};
}

}  // namespace detail

inline constexpr int kMultistartCount = 16;
inline constexpr double kPairDedupTolerance = 1e-9;
inline constexpr double kDegenerateCondition = 1e8;

/// All local minima of the boundary-to-boundary distance for one planar pair,
/// found by multistart projected Newton, sorted by distance.
inline std::vector<ClosestPair> local_minima_2d(const ObstacleShape& a, const ObstacleShape& b,
                                                int index_a = 0, int index_b = 1) {
  constexpr int kScan = 32;
  struct Cand {
    double f;
    int i, j;
  };
  std::vector<Cand> grid;
  grid.reserve(kScan * kScan);
  std::vector<Vec2> pa(kScan), pb(kScan);
  for (int i = 0; i < kScan; ++i) {
    pa[i] = curve_jet(a, kTwoPi * i / kScan).x;
    pb[i] = curve_jet(b, kTwoPi * i / kScan).x;
  }
  for (int i = 0; i < kScan; ++i) {
    for (int j = 0; j < kScan; ++j) grid.push_back({(pa[i] - pb[j]).squaredNorm(), i, j});
  }
  auto at = [&](int i, int j) {
    return grid[((i + kScan) % kScan) * kScan + (j + kScan) % kScan].f;
  };
  // Discrete local minima first, then the best remaining grid points.
  std::vector<Cand> starts;
  for (const Cand& c : grid) {
    bool is_min = true;
    for (int di = -1; di <= 1 && is_min; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if ((di || dj) && at(c.i + di, c.j + dj) < c.f) {
          is_min = false;
          break;
        }
      }
    }
    if (is_min) starts.push_back(c);
  }
  std::sort(starts.begin(), starts.end(), [](const Cand& x, const Cand& y) { return x.f < y.f; });
  if (starts.size() < static_cast<std::size_t>(kMultistartCount)) {
    std::vector<Cand> sorted = grid;
    std::sort(sorted.begin(), sorted.end(), [](const Cand& x, const Cand& y) { return x.f < y.f; });
    for (const Cand& c : sorted) {
      if (starts.size() >= static_cast<std::size_t>(kMultistartCount)) break;
      const bool seen = std::any_of(starts.begin(), starts.end(),
                                    [&](const Cand& s) { return s.i == c.i && s.j == c.j; });
      if (!seen) starts.push_back(c);
    }
  }
  if (starts.size() > static_cast<std::size_t>(kMultistartCount)) starts.resize(kMultistartCount);

  std::vector<detail::PairMinimum> minima;
  for (const Cand& c : starts) {
    auto m = detail::newton_pair(a, b, kTwoPi * c.i / kScan, kTwoPi * c.j / kScan);
    if (!m) continue;
    const bool dup = std::any_of(minima.begin(), minima.end(), [&](const detail::PairMinimum& q) {
      const Vec2 d1 = curve_jet(a, q.s).x - curve_jet(a, m->s).x;
      const Vec2 d2 = curve_jet(b, q.t).x - curve_jet(b, m->t).x;
      return d1.norm() < 1e-7 && d2.norm() < 1e-7;
    });
    if (!dup) minima.push_back(*m);
  }
  if (minima.empty()) {
    throw NumericalError("min_distance: projected Newton failed from every start for obstacles " +
                         std::to_string(index_a) + " and " + std::to_string(index_b));
  }
  std::sort(minima.begin(), minima.end(),
            [](const auto& x, const auto& y) { return x.distance < y.distance; });
  std::vector<ClosestPair> out;
  for (const auto& m : minima) {
    if (m.hessian_condition > kDegenerateCondition) {
      throw DegeneracyError(
          "min_distance: non-isolated minimizing chord between obstacles " +
          std::to_string(index_a) + " and " + std::to_string(index_b) +
          " (Hessian condition number above 1e8); locally strictly convex boundaries are required");
    }
    out.push_back({curvature_at(a, m.s, index_a), curvature_at(b, m.t, index_b), m.distance});
  }
  return out;
}

/// Closest points of two spheres by alternating projections; used to cross
/// check the closed form.
inline ClosestPair sphere_pair_projection(const Sphere& a, const Sphere& b) {
  Vec3 q = b.center;
  Vec3 p = a.center;
  for (int it = 0; it < 200; ++it) {
    const Vec3 p_new = a.center + a.radius * (q - a.center).normalized();
    const Vec3 q_new = b.center + b.radius * (p_new - b.center).normalized();
    const double change = (p_new - p).norm() + (q_new - q).norm();
    p = p_new;
    q = q_new;
    if (change < 1e-15) break;
  }
  ClosestPair cp;
  cp.first.position = p;
  cp.second.position = q;
  cp.distance = (p - q).norm();
  return cp;
}

namespace detail {

inline std::array<double, 2> sphere_angles(const Sphere& s, const Vec3& point) {
  const Vec3 u = (point - s.center).normalized();
  return {std::acos(std::clamp(u.z(), -1.0, 1.0)), std::atan2(u.y(), u.x())};
}

inline ClosestPair sphere_pair_closed_form(const Sphere& a, const Sphere& b, int ia, int ib) {
  const Vec3 axis = b.center - a.center;
  const double dist = axis.norm();
  const Vec3 u = axis / dist;
  const double gap = dist - a.radius - b.radius;
  ClosestPair cp;
  cp.first = curvature_at(Sphere(a), sphere_angles(a, a.center + a.radius * u), ia);
  cp.second = curvature_at(Sphere(b), sphere_angles(b, b.center - b.radius * u), ib);
  cp.first.position = a.center + a.radius * u;
  cp.first.unit_normal = u;
  cp.second.position = b.center - b.radius * u;
  cp.second.unit_normal = -u;
  cp.distance = gap;
  return cp;
}

}  // namespace detail

/// Local minima of the distance between obstacles a and b, best first.
inline std::vector<ClosestPair> pair_minima(const ObstacleShape& a, const ObstacleShape& b,
                                            int ia, int ib) {
  const auto* sa = std::get_if<Sphere>(&a);
  const auto* sb = std::get_if<Sphere>(&b);
  if (sa && sb) {
    ClosestPair cp = detail::sphere_pair_closed_form(*sa, *sb, ia, ib);
    if (cp.distance > 0.0) {
      const ClosestPair check = sphere_pair_projection(*sa, *sb);
      if (std::abs(check.distance - cp.distance) > 1e-9 * std::max(1.0, cp.distance)) {
        throw NumericalError("min_distance: sphere closed form disagrees with projection check");
      }
    }
    return {cp};
  }
  if (sa || sb) throw SceneError("min_distance: cannot mix planar and spherical obstacles");
  const auto* ca = std::get_if<Circle>(&a);
  const auto* cb = std::get_if<Circle>(&b);
  if (ca && cb) {
    const Vec2 axis = cb->center - ca->center;
    const double gap = axis.norm() - ca->radius - cb->radius;
    if (!(gap > 0.0)) {
      throw SceneError("obstacles " + std::to_string(ia) + " and " + std::to_string(ib) +
                       " overlap or touch");
    }
    auto minima = local_minima_2d(a, b, ia, ib);
    const ClosestPair& best = minima.front();
    if (std::abs(best.distance - gap) > 1e-9 * std::max(1.0, gap)) {
      throw NumericalError("min_distance: circle closed form disagrees with Newton search");
    }
    // Replace with the closed-form points (identical to within Newton accuracy).
    const double ta = std::atan2(axis.y(), axis.x());
    ClosestPair cp{curvature_at(a, detail::wrap_angle(ta), ia),
                   curvature_at(b, detail::wrap_angle(ta + std::numbers::pi), ib), gap};
    minima.front() = cp;
    return minima;
  }
  return local_minima_2d(a, b, ia, ib);
}

/// Minimal distance between distinct obstacles and every pair of boundary
/// points realizing it (within 1e-9).
inline DistanceResult min_distance(const std::vector<ObstacleShape>& obstacles) {
  if (obstacles.size() < 2) throw SceneError("min_distance: need at least two obstacles");
  DistanceResult r;
  r.delta = std::numeric_limits<double>::infinity();
  std::vector<ClosestPair> all;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (std::size_t j = i + 1; j < obstacles.size(); ++j) {
      auto mins = pair_minima(obstacles[i], obstacles[j], static_cast<int>(i), static_cast<int>(j));
      for (auto& m : mins) {
        if (!(m.distance > 1e-12)) {
          throw SceneError("obstacles " + std::to_string(i) + " and " + std::to_string(j) +
                           " overlap or touch");
        }
        all.push_back(m);
        r.delta = std::min(r.delta, m.distance);
      }
    }
  }
  // A start landing inside the other obstacle can fake a positive "minimum";
  // reject scenes where the curves cross by checking the global scan above.
  for (const auto& m : all) {
    if (m.distance <= r.delta + kPairDedupTolerance) r.achieving_pairs.push_back(m);
  }
  return r;
}

namespace detail {

// Point-in-obstacle test used to detect overlapping planar curves, which
// the distance minimizer alone cannot see (crossing curves have distance 0).
inline bool inside(const ObstacleShape& shape, const Vec2& p) {
  if (const auto* c = std::get_if<Circle>(&shape)) return (p - c->center).norm() < c->radius;
  if (const auto* e = std::get_if<Ellipse>(&shape)) {
    const Vec2 d = p - e->center;
    const double cr = std::cos(e->rotation), sr = std::sin(e->rotation);
    const double u = cr * d.x() + sr * d.y(), v = -sr * d.x() + cr * d.y();
    return (u / e->semi_major) * (u / e->semi_major) + (v / e->semi_minor) * (v / e->semi_minor) < 1.0;
  }
  if (const auto* s = std::get_if<Star>(&shape)) {
    const Vec2 d = p - s->center;
    return d.norm() < star_radius(*s, std::atan2(d.y(), d.x()))[0];
  }
  return false;
}

}  // namespace detail

/// An immutable, validated obstacle configuration.
class Scene {
 public:
  Scene(int dimension, std::vector<ObstacleShape> obstacles)
      : dimension_(dimension), obstacles_(std::move(obstacles)) {
    if (dimension_ != 2 && dimension_ != 3) throw SceneError("dimension must be 2 or 3");
    if (obstacles_.empty()) throw SceneError("scene needs at least one obstacle");
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
      if (shape_dimension(obstacles_[i]) != dimension_) {
        throw SceneError("obstacle " + std::to_string(i) + " (" + shape_kind(obstacles_[i]) +
                         ") does not match scene dimension " + std::to_string(dimension_));
      }
      validate_shape(obstacles_[i]);
    }
    if (dimension_ == 2) check_planar_overlap();
    if (obstacles_.size() >= 2) distance_ = min_distance(obstacles_);
  }

  int dimension() const { return dimension_; }
  std::size_t size() const { return obstacles_.size(); }
  const std::vector<ObstacleShape>& obstacles() const { return obstacles_; }
  const ObstacleShape& obstacle(std::size_t i) const { return obstacles_.at(i); }

  double delta() const {
    if (!distance_) throw SceneError("delta is defined only for scenes with two or more obstacles");
    return distance_->delta;
  }
  const DistanceResult& distance() const {
    if (!distance_) throw SceneError("delta is defined only for scenes with two or more obstacles");
    return *distance_;
  }

 private:
  void check_planar_overlap() const {
    constexpr int kProbe = 512;
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
      for (std::size_t j = 0; j < obstacles_.size(); ++j) {
        if (i == j) continue;
        for (int k = 0; k < kProbe; ++k) {
          if (detail::inside(obstacles_[j], curve_jet(obstacles_[i], kTwoPi * k / kProbe).x)) {
            throw SceneError("obstacles " + std::to_string(i) + " and " + std::to_string(j) +
                             " overlap");
          }
        }
      }
    }
  }

  int dimension_;
  std::vector<ObstacleShape> obstacles_;
  std::optional<DistanceResult> distance_;
};

inline DistanceResult min_distance(const Scene& scene) { return scene.distance(); }

/// The same scene under x -> rotation * x + shift (rotation about the z axis
/// in 3D). Used by invariance checks.
inline ObstacleShape transformed(const ObstacleShape& shape, double angle, const Vec3& shift) {
  const double c = std::cos(angle), s = std::sin(angle);
  auto rot2 = [&](const Vec2& p) { return Vec2(c * p.x() - s * p.y() + shift.x(), s * p.x() + c * p.y() + shift.y()); };
  return std::visit(
      [&](const auto& sh) -> ObstacleShape {
        using S = std::decay_t<decltype(sh)>;
        S out = sh;
        if constexpr (std::is_same_v<S, Sphere>) {
          out.center = Vec3(c * sh.center.x() - s * sh.center.y(), s * sh.center.x() + c * sh.center.y(),
                            sh.center.z()) + shift;
        } else if constexpr (std::is_same_v<S, Ellipse>) {
          out.center = rot2(sh.center);
          out.rotation = sh.rotation + angle;
        } else if constexpr (std::is_same_v<S, Star>) {
          out.center = rot2(sh.center);
          out.rotation = sh.rotation + angle;
        } else {
          out.center = rot2(sh.center);
        }
        return out;
      },
      shape);
}

inline Scene transformed(const Scene& scene, double angle, const Vec3& shift) {
  std::vector<ObstacleShape> obs;
  for (const auto& o : scene.obstacles()) obs.push_back(transformed(o, angle, shift));
  return Scene(scene.dimension(), std::move(obs));
}

}  // namespace relxi
