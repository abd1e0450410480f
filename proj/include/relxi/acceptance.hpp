#pragma once

// Acceptance checks shared by the acceptance test binary and `relxi validate`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "relxi/analysis.hpp"
#include "relxi/billiards.hpp"
#include "relxi/geometry.hpp"
#include "relxi/spheres_3d.hpp"

namespace relxi::acceptance {

struct Check {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string line(const Check& c) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] criterion %2d  %-28s (%.1f s) ", c.passed ? "PASS" : "FAIL", c.criterion,
                c.name.c_str(), c.seconds);
  return head + c.detail;
}

namespace detail {

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline bool convex_scene(const Scene& scene) {
  for (const auto& o : scene.obstacles()) {
    if (const auto* s = std::get_if<Star>(&o)) {
      constexpr int kScan = 2048;
      for (int i = 0; i < kScan; ++i) {
        if (curvature_at(*s, kTwoPi * i / kScan).curvature <= 0.0) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

/// Sample window for decay fits: 2 delta kappa from 8 to 20, 13 log-spaced points.
inline std::vector<double> decay_window(double delta) { return make_grid(4.0 / delta, 10.0 / delta, 13, true); }

/// The slope of log|Xi| within `rel` of -2 delta.
inline Check check_slope(const AsymptoticFit& fit, double delta, double rel = 0.01, int criterion = 1) {
  Check c{criterion, "decay rate"};
  const double target = -2.0 * delta;
  const double gap = std::abs(fit.slope / target - 1.0);
  c.passed = gap <= rel;
  c.detail = detail::fmt("slope %.6f vs %.6f (rel %.2e", fit.slope, target, gap) + detail::fmt(", tol %.0e)", rel);
  return c;
}

/// The a + b/kappa prefactor within `rel` of the orbit prediction.
inline Check check_prefactor(const AsymptoticFit& fit, double predicted, double rel, int criterion) {
  Check c{criterion, "prefactor"};
  const double gap = std::abs(fit.prefactor / predicted - 1.0);
  c.passed = gap <= rel;
  c.detail = detail::fmt("fitted %.6f vs predicted %.6f (rel %.2e", fit.prefactor, predicted, gap) +
             detail::fmt(", tol %.0e)", rel);
  return c;
}

/// Slope of a possibly non-convex scene at most -2 (0.95 delta).
inline Check check_rough_bound(const AsymptoticFit& fit, double delta, int criterion = 8) {
  Check c{criterion, "unconditional bound"};
  const double bound = -2.0 * 0.95 * delta;
  c.passed = fit.slope <= bound;
  c.detail = detail::fmt("slope %.6f <= %.6f", fit.slope, bound);
  return c;
}

/// Finite-difference |det(I - P)|^{1/2} against 2 delta / c on random circle and sphere pairs.
inline Check check_poincare(int circle_pairs = 20, int sphere_pairs = 10, unsigned seed = 20240611u,
                            double rel = 1e-6) {
  detail::Stopwatch sw;
  Check c{4, "Poincare cross-validation"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.4, 2.5), gap(0.3, 3.0), angle(0.0, kTwoPi), shift(-2.0, 2.0),
      polar(0.2, 3.0);
  double worst = 0.0;
  int tested = 0;
  auto record = [&](const Scene& scene) {
    const auto orbits = find_bouncing_orbits(scene);
    for (const auto& o : orbits) {
      if (!o.shortest) continue;
      const double numeric = std::sqrt(o.det_factor);
      const double closed = 2.0 * chord_length(o) / o.c;
      worst = std::max(worst, std::abs(numeric / closed - 1.0));
      ++tested;
    }
  };
  try {
    for (int k = 0; k < circle_pairs; ++k) {
      const double r = radius(rng), rho = radius(rng), d = gap(rng), phi = angle(rng);
      const Vec2 a(shift(rng), shift(rng));
      const Vec2 dir(std::cos(phi), std::sin(phi));
      record(Scene(2, {Circle{a, r}, Circle{a + (r + rho + d) * dir, rho}}));
    }
    for (int k = 0; k < sphere_pairs; ++k) {
      const double r = radius(rng), rho = radius(rng), d = gap(rng), phi = angle(rng), th = polar(rng);
      const Vec3 a(shift(rng), shift(rng), shift(rng));
      const Vec3 dir(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th));
      record(Scene(3, {Sphere{a, r}, Sphere{a + (r + rho + d) * dir, rho}}));
    }
    c.passed = tested == circle_pairs + sphere_pairs && worst <= rel;
    c.detail = detail::fmt("%g orbits, worst rel gap %.2e (tol %.0e)", tested, worst, rel);
  } catch (const std::exception& e) {
    c.detail = std::string("error: ") + e.what();
  }
  c.seconds = sw.seconds();
  return c;
}

/// D = 2 (delta + r + rho)^2 and the sphere-pair prefactor identity on random triples.
inline Check check_sphere_identity(int triples = 50, unsigned seed = 7u, double tol = 1e-12) {
  detail::Stopwatch sw;
  Check c{5, "sphere identity"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.1, 5.0);
  double worst_d = 0.0, worst_p = 0.0;
  for (int k = 0; k < triples; ++k) {
    const double r = dist(rng), rho = dist(rng), delta = dist(rng);
    CurvatureData cd{r, r, rho, rho, 0.0};
    const double d_value = dref_value(delta, cd);
    const double d_closed = 2.0 * (delta + r + rho) * (delta + r + rho);
    worst_d = std::max(worst_d, std::abs(d_value / d_closed - 1.0));
    const double lhs = 0.5 * std::sqrt(rho * rho * r * r / (2.0 * d_value * delta * delta));
    const double rhs = r * rho / (4.0 * delta * (r + rho + delta));
    const double via_coefficient = singularity_coefficient_3d(delta, cd) / (2.0 * delta);
    worst_p = std::max({worst_p, std::abs(lhs / rhs - 1.0), std::abs(via_coefficient / rhs - 1.0)});
  }
  c.passed = worst_d <= tol && worst_p <= tol;
  c.detail = detail::fmt("worst rel gap D %.2e, prefactor %.2e (tol %.0e)", worst_d, worst_p, tol);
  c.seconds = sw.seconds();
  return c;
}

/// |Xi_{n} - Xi_{2n}| at one kappa for a planar scene.
inline Check check_quadrature_refinement(const Scene& scene, double kappa = 5.0, int n = 128, double tol = 1e-8) {
  detail::Stopwatch sw;
  Check c{6, "2D quadrature refinement"};
  XiOptions coarse, fine;
  coarse.n = n;
  fine.n = 2 * n;
  const double a = xi_eval_imag(scene, kappa, coarse).xi.real();
  const double b = xi_eval_imag(scene, kappa, fine).xi.real();
  c.passed = std::abs(a - b) <= tol;
  c.detail = detail::fmt("|Xi_n - Xi_2n| = %.2e at kappa %g (tol %.0e)", std::abs(a - b), kappa, tol);
  c.seconds = sw.seconds();
  return c;
}

/// |Xi_{L} - Xi_{L+2}| <= rel |Xi| for a sphere pair.
inline Check check_truncation(const Scene& scene, double kappa = 5.0, int l_max = 12, double rel = 1e-6) {
  detail::Stopwatch sw;
  Check c{6, "3D truncation"};
  const double a = xi_eval_3d(scene, kappa, l_max).xi.real();
  const double b = xi_eval_3d(scene, kappa, l_max + 2).xi.real();
  const double gap = std::abs(a - b) / std::abs(b);
  c.passed = gap <= rel;
  c.detail = detail::fmt("|Xi_L - Xi_L+2| / |Xi| = %.2e at kappa %g (tol %.0e)", gap, kappa, rel);
  c.seconds = sw.seconds();
  return c;
}

/// Single-sphere eigenvalues against direct quadrature of the operator, l <= l_max.
inline Check check_sphere_spectrum(double radius = 1.0, double kappa = 5.0, int l_max = 5, double tol = 1e-6) {
  detail::Stopwatch sw;
  Check c{6, "single-sphere spectrum"};
  const auto eigs = single_sphere_eigs(radius, kappa, l_max);
  double worst = 0.0;
  for (int l = 0; l <= l_max; ++l) {
    worst = std::max(worst, std::abs(single_sphere_galerkin(radius, kappa, l) - eigs[l]));
  }
  c.passed = worst <= tol;
  c.detail = detail::fmt("worst |spectral - quadrature| %.2e for l <= %g (tol %.0e)", worst, l_max, tol);
  c.seconds = sw.seconds();
  return c;
}

/// Reality on the imaginary axis, rigid-motion and relabeling invariance.
inline Check check_invariants(const std::vector<std::pair<std::string, Scene>>& scenes,
                              const std::vector<double>& kappas = {0.5, 2.0}) {
  detail::Stopwatch sw;
  Check c{7, "structural invariants"};
  double worst_imag = 0.0, worst_rigid = 0.0, worst_label = 0.0;
  try {
    for (const auto& [name, scene] : scenes) {
      const bool planar = scene.dimension() == 2;
      const Vec3 shift = planar ? Vec3(0.37, -1.21, 0.0) : Vec3(0.37, -1.21, 0.58);
      const Scene moved = transformed(scene, 0.7, shift);
      std::vector<ObstacleShape> reversed(scene.obstacles().rbegin(), scene.obstacles().rend());
      const Scene relabeled(scene.dimension(), reversed);
      for (double kappa : kappas) {
        SweepOptions o;
        o.n = 128;
        o.l_max = 12;
        const XiSample base = xi_imaginary(scene, kappa, o);
        // the complex path does not assume a real result
        XiSample off = base;
        if (planar) {
          XiOptions xo;
          xo.n = 128;
          xo.force_complex = true;
          off = xi_eval(scene, cplx(0.0, kappa), xo);
        }
        worst_imag = std::max({worst_imag, std::abs(base.xi.imag()), std::abs(off.xi.imag())});
        worst_rigid = std::max(worst_rigid, std::abs(xi_imaginary(moved, kappa, o).xi - base.xi));
        worst_label = std::max(worst_label, std::abs(xi_imaginary(relabeled, kappa, o).xi - base.xi));
      }
    }
    c.passed = worst_imag <= 1e-10 && worst_rigid <= 1e-10 && worst_label <= 1e-12;
    c.detail = detail::fmt("%g scenes: |Im Xi| %.1e, rigid %.1e", static_cast<double>(scenes.size()), worst_imag,
                           worst_rigid) +
               detail::fmt(", relabel %.1e", worst_label);
  } catch (const std::exception& e) {
    c.detail = std::string("error: ") + e.what();
  }
  c.seconds = sw.seconds();
  return c;
}

/// Quadrature size used for real-axis sweeps: 8 nodes per unit of lambda, at least 64, even.
inline int real_axis_nodes(double lambda) {
  int n = std::max(64, static_cast<int>(std::ceil(8.0 * lambda)));
  return n + (n % 2);
}

/// Real-axis sweep lambda_k = k d_lambda up to lambda_max, one quadrature size per point.
inline std::vector<RelShiftSample> real_axis_sweep(const Scene& scene, double d_lambda, double lambda_max,
                                                   double epsilon, unsigned threads = 1) {
  const int count = static_cast<int>(std::llround(lambda_max / d_lambda));
  return parallel_map<RelShiftSample>(static_cast<std::size_t>(count), threads, [&](std::size_t k) {
    const double lambda = d_lambda * static_cast<double>(k + 1);
    SweepOptions o;
    o.n = real_axis_nodes(lambda);
    return xi_real_axis(scene, {lambda}, epsilon, o).front();
  });
}

/// Peak of the windowed sine transform within [2 delta - 0.1, 2 delta + 0.1] (scaled by delta).
inline Check check_wave_trace(const Scene& scene, double epsilon = 0.05, double lambda_max = 40.0,
                              unsigned threads = 1) {
  detail::Stopwatch sw;
  Check c{9, "wave-trace peak location"};
  try {
    const double delta = scene.delta();
    const auto samples = real_axis_sweep(scene, 0.25, lambda_max, epsilon, threads);
    std::vector<double> t_grid;
    for (int j = 1; j <= 600; ++j) t_grid.push_back(0.01 * j * delta);
    const auto w = wave_trace_demo(samples, t_grid, delta, find_bouncing_orbits(scene));
    const double lo = 1.9 * delta, hi = 2.1 * delta;
    c.passed = w.detected && w.measured_peak >= lo && w.measured_peak <= hi;
    c.detail = detail::fmt("peak at t = %.3f, window [%.2f, ", w.measured_peak, lo) +
               detail::fmt("%.2f], predicted %.3f (location only)", hi, w.t_star);
    if (!w.detected) c.detail += ", no singularity detected";
  } catch (const std::exception& e) {
    c.detail = std::string("error: ") + e.what();
  }
  c.seconds = sw.seconds();
  return c;
}

/// E < 0, |E| decreasing over the given separations, and the error estimate
/// covering the shift under tol-halving.
inline Check check_energy(const std::vector<Scene>& scenes, double tol = 1e-8) {
  detail::Stopwatch sw;
  Check c{10, "Casimir energy"};
  try {
    bool ok = true;
    double previous = 0.0, worst_ratio = 0.0;
    std::string values;
    for (std::size_t k = 0; k < scenes.size(); ++k) {
      EnergyOptions o;
      o.tol = tol;
      const auto e = casimir_energy(scenes[k], o);
      o.tol = 0.5 * tol;
      const auto half = casimir_energy(scenes[k], o);
      const double shift = std::abs(half.energy - e.energy);
      worst_ratio = std::max(worst_ratio, shift / e.abs_error_estimate);
      ok = ok && e.energy < 0.0 && shift <= e.abs_error_estimate;
      if (k > 0) ok = ok && std::abs(e.energy) < std::abs(previous);
      previous = e.energy;
      values += (k ? ", " : "") + detail::fmt("%.6e", e.energy);
    }
    c.passed = ok;
    c.detail = "E = [" + values + "]" + detail::fmt(", worst shift/estimate %.2e", worst_ratio);
  } catch (const std::exception& e) {
    c.detail = std::string("error: ") + e.what();
  }
  c.seconds = sw.seconds();
  return c;
}

/// Sweep, fit and compare against the orbit prediction. Returns the slope
/// check (convex scenes) or the rough bound (non-convex), then the prefactor.
inline std::vector<Check> check_decay(const Scene& scene, const std::vector<double>& kappas,
                                      const SweepOptions& options, int slope_criterion, int prefactor_criterion,
                                      double prefactor_tol) {
  detail::Stopwatch sw;
  std::vector<Check> out;
  try {
    const double delta = scene.delta();
    const auto samples = imaginary_axis_sweep(scene, kappas, options);
    const auto fit = fit_decay(samples, delta);
    const bool convex = detail::convex_scene(scene);
    out.push_back(convex ? check_slope(fit, delta, 0.01, slope_criterion) : check_rough_bound(fit, delta));
    if (convex && prefactor_criterion > 0) {
      out.push_back(check_prefactor(fit, predicted_prefactor(find_bouncing_orbits(scene)), prefactor_tol,
                                    prefactor_criterion));
    }
  } catch (const std::exception& e) {
    Check c{slope_criterion, "decay fit"};
    c.detail = std::string("error: ") + e.what();
    out.push_back(c);
  }
  for (auto& c : out) c.seconds = sw.seconds();
  return out;
}

}  // namespace relxi::acceptance
