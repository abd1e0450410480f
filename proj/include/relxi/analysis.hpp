#pragma once

// From Xi samples to numbers one can compare: decay fits, Casimir energy and
// force, the relative spectral shift on the real axis and the location of the
// first wave-trace singularity.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "relxi/billiards.hpp"
#include "relxi/error.hpp"
#include "relxi/geometry.hpp"
#include "relxi/layer_potential_2d.hpp"
#include "relxi/parallel.hpp"
#include "relxi/spheres_3d.hpp"
#include "relxi/xi_sample.hpp"

namespace relxi {

/// Discretization knobs shared by the sweeps.
struct SweepOptions {
  int n = 0;      // 2D nodes per obstacle, 0 = default rule
  int l_max = 0;  // 3D truncation, 0 = chosen from kappa
  bool estimate_error = false;
  unsigned threads = 1;
};

/// Truncation used when none is given: enough harmonics for the curvature
/// scale kappa * R of the larger sphere.
inline int auto_truncation(const Scene& scene, double kappa) {
  double r = 0.0;
  for (const auto& o : scene.obstacles()) {
    if (const auto* s = std::get_if<Sphere>(&o)) r = std::max(r, s->radius);
  }
  return std::clamp(static_cast<int>(std::ceil(2.0 * kappa * r)) + 12, 12, 40);
}

/// Xi(i kappa) for a planar scene or a sphere pair.
inline XiSample xi_imaginary(const Scene& scene, double kappa, const SweepOptions& options = {}) {
  if (scene.dimension() == 3) {
    return xi_eval_3d(scene, kappa, options.l_max > 0 ? options.l_max : auto_truncation(scene, kappa));
  }
  XiOptions xo;
  xo.n = options.n;
  xo.estimate_error = options.estimate_error;
  return xi_eval_imag(scene, kappa, xo);
}

inline std::vector<XiSample> imaginary_axis_sweep(const Scene& scene, const std::vector<double>& kappas,
                                                  const SweepOptions& options = {}) {
  return parallel_map<XiSample>(kappas.size(), options.threads,
                                [&](std::size_t i) { return xi_imaginary(scene, kappas[i], options); });
}

/// count points from start to stop, geometric or uniform.
inline std::vector<double> make_grid(double start, double stop, int count, bool logarithmic) {
  if (count < 2) throw ConfigError("grid count must be at least 2");
  if (!(start < stop)) throw ConfigError("grid start must be below stop");
  if (logarithmic && !(start > 0.0)) throw ConfigError("logarithmic grid needs a positive start");
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / (count - 1);
    g[i] = logarithmic ? start * std::pow(stop / start, f) : start + (stop - start) * f;
  }
  g.back() = stop;
  return g;
}

// ---------------------------------------------------------------------------
// decay fit

struct AsymptoticFit {
  double slope = 0.0;       // d log|Xi(i kappa)| / d kappa
  double intercept = 0.0;
  double prefactor = 0.0;   // a in -Xi e^{2 delta kappa} ~ a + b / kappa
  double correction = 0.0;  // b
  double slope_residual = 0.0;      // rms residual of the log-linear fit
  double prefactor_residual = 0.0;  // rms residual of the a + b/kappa fit
  double kappa_min = 0.0, kappa_max = 0.0;
  int used = 0;
  int excluded = 0;  // samples below 1e-280 in magnitude
};

inline constexpr double kFitFloor = 1e-280;
inline constexpr int kMinFitSamples = 8;

inline AsymptoticFit fit_decay(const std::vector<XiSample>& samples, double delta) {
  if (!(delta > 0.0)) throw InputError("fit_decay: delta must be positive");
  std::vector<double> kappa, value;
  AsymptoticFit fit;
  for (const auto& s : samples) {
    if (s.lambda.real() != 0.0 || !(s.lambda.imag() > 0.0)) {
      throw InputError("fit_decay: samples must lie on the positive imaginary axis");
    }
    if (std::abs(s.xi.imag()) > 1e-10 * std::max(1.0, std::abs(s.xi.real()))) {
      throw InputError("fit_decay: complex Xi value on the imaginary axis");
    }
    if (!(std::abs(s.xi.real()) >= kFitFloor)) {
      ++fit.excluded;
      continue;
    }
    kappa.push_back(s.lambda.imag());
    value.push_back(s.xi.real());
  }
  if (fit.excluded > 0) {
    std::fprintf(stderr, "warning: fit_decay excluded %d samples below 1e-280\n", fit.excluded);
  }
  const int m = static_cast<int>(kappa.size());
  if (m < kMinFitSamples) {
    throw InputError("fit_decay: need at least 8 usable samples, got " + std::to_string(m));
  }
  Eigen::MatrixXd a1(m, 2), a2(m, 2);
  Eigen::VectorXd y1(m), y2(m);
  for (int i = 0; i < m; ++i) {
    a1(i, 0) = 1.0;
    a1(i, 1) = kappa[i];
    y1(i) = std::log(std::abs(value[i]));
    a2(i, 0) = 1.0;
    a2(i, 1) = 1.0 / kappa[i];
    y2(i) = -value[i] * std::exp(2.0 * delta * kappa[i]);
  }
  const Eigen::Vector2d c1 = a1.colPivHouseholderQr().solve(y1);
  const Eigen::Vector2d c2 = a2.colPivHouseholderQr().solve(y2);
  fit.intercept = c1(0);
  fit.slope = c1(1);
  fit.prefactor = c2(0);
  fit.correction = c2(1);
  fit.slope_residual = std::sqrt((a1 * c1 - y1).squaredNorm() / m);
  fit.prefactor_residual = std::sqrt((a2 * c2 - y2).squaredNorm() / m);
  fit.kappa_min = *std::min_element(kappa.begin(), kappa.end());
  fit.kappa_max = *std::max_element(kappa.begin(), kappa.end());
  fit.used = m;
  return fit;
}

// ---------------------------------------------------------------------------
// Casimir energy

struct EnergyOptions {
  double tol = 1e-8;
  double kappa_min = 1e-3;
  int max_intervals = 400;
  SweepOptions sweep;
};

struct EnergyResult {
  double energy = 0.0;
  double abs_error_estimate = 0.0;
  double quadrature_error = 0.0;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  double tail_bound = 0.0;
  double tail_prefactor = 0.0;  // A in the bound A e^{-2 delta kappa}
  double sliver = 0.0;          // estimate of the [0, kappa_min] part
  int evaluations = 0;
  int intervals = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod(const F& f, double a, double b, int& evaluations) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kKronrodNodes[j];
    const double s = f(c - x) + f(c + x);
    kronrod += kKronrodWeights[j] * s;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
  }
  evaluations += 15;
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace detail

/// (1/2pi) int_0^infty Xi(i kappa) d kappa.
inline EnergyResult casimir_energy(const Scene& scene, const EnergyOptions& options = {}) {
  if (scene.size() < 2) throw SceneError("casimir_energy: need at least two obstacles");
  if (!(options.tol > 0.0)) throw ConfigError("casimir_energy: tolerance must be positive");
  const double delta = scene.delta();
  const double two_pi = 2.0 * std::numbers::pi;
  EnergyResult out;
  out.kappa_min = options.kappa_min;
  auto xi = [&](double kappa) { return xi_imaginary(scene, kappa, options.sweep).xi.real(); };
  auto scaled = [&](double kappa) { return std::abs(xi(kappa)) * std::exp(2.0 * delta * kappa); };

  // Tail bound A e^{-2 delta kappa}. A starts from the orbit prediction when
  // the scene admits one and is raised to the measured value near kappa_max.
  double amplitude = 0.0;
  try {
    amplitude = predicted_prefactor(find_bouncing_orbits(scene));
  } catch (const NumericalError&) {
    amplitude = 0.0;
  }
  amplitude = std::max(amplitude, scaled(1.0 / delta));
  auto cutoff = [&](double a) {
    return std::max(10.0 * options.kappa_min, std::log(2.0 * a / (two_pi * delta * options.tol)) / (2.0 * delta));
  };
  double kappa_max = cutoff(amplitude);
  for (int pass = 0; pass < 2; ++pass) {
    amplitude = std::max({amplitude, scaled(0.5 * kappa_max), scaled(kappa_max)});
    kappa_max = cutoff(amplitude);
  }
  out.kappa_max = kappa_max;
  out.tail_prefactor = amplitude;
  out.tail_bound = 2.0 * amplitude * std::exp(-2.0 * delta * kappa_max) / (2.0 * delta * two_pi);

  // Initial partition: decades below 1/delta, then unit steps in 2 delta kappa.
  std::vector<double> cuts{options.kappa_min};
  const double knee = std::min(1.0 / delta, kappa_max);
  while (cuts.back() * 10.0 < knee) cuts.push_back(cuts.back() * 10.0);
  if (knee > cuts.back()) cuts.push_back(knee);
  const double step = 1.0 / delta;
  while (cuts.back() + step < kappa_max) cuts.push_back(cuts.back() + step);
  if (kappa_max > cuts.back()) cuts.push_back(kappa_max);

  auto integrand = [&](double kappa) { return xi(kappa) / two_pi; };
  std::priority_queue<detail::Segment> heap;
  double total = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto seg = detail::gauss_kronrod(integrand, cuts[i], cuts[i + 1], out.evaluations);
    heap.push(seg);
  }
  auto totals = [&] {
    total = 0.0;
    error = 0.0;
    auto copy = heap;
    std::vector<detail::Segment> segs;
    while (!copy.empty()) {
      segs.push_back(copy.top());
      copy.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    for (const auto& s : segs) {
      total += s.value;
      error += s.error;
    }
  };
  totals();
  while (error > 0.5 * options.tol) {
    if (static_cast<int>(heap.size()) >= options.max_intervals) {
      throw QuadratureError("casimir_energy: refinement did not converge (" + std::to_string(heap.size()) +
                            " intervals, error estimate " + std::to_string(error) + ", target " +
                            std::to_string(0.5 * options.tol) + ")");
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    heap.push(detail::gauss_kronrod(integrand, worst.a, mid, out.evaluations));
    heap.push(detail::gauss_kronrod(integrand, mid, worst.b, out.evaluations));
    totals();
  }
  out.intervals = static_cast<int>(heap.size());
  out.quadrature_error = error;
  out.sliver = integrand(options.kappa_min) * options.kappa_min;
  out.energy = total + out.sliver;
  out.abs_error_estimate = error + out.tail_bound + std::abs(out.sliver);
  return out;
}

struct ForceResult {
  double force = 0.0;  // negative = attraction
  double error_estimate = 0.0;
  double step = 0.0;   // displacement h * delta
  EnergyResult closer, farther;
};

/// -dE/d delta by central differences, moving obstacle 1 along the chord of
/// the shortest orbit by +-h delta.
inline ForceResult casimir_force(const Scene& scene, double h = 0.02, const EnergyOptions& options = {}) {
  if (scene.size() != 2) throw SceneError("casimir_force: exactly two obstacles required");
  if (!(h > 0.0)) throw ConfigError("casimir_force: step must be positive");
  const double delta = scene.delta();
  const ClosestPair& pair = scene.distance().achieving_pairs.front();
  const bool forward = pair.first.obstacle_index == 0;
  Vec3 axis = (pair.second.position - pair.first.position).normalized();
  if (!forward) axis = -axis;
  ForceResult out;
  out.step = h * delta;
  auto moved = [&](double sign) {
    return Scene(scene.dimension(),
                 {scene.obstacle(0), transformed(scene.obstacle(1), 0.0, sign * out.step * axis)});
  };
  out.farther = casimir_energy(moved(1.0), options);
  out.closer = casimir_energy(moved(-1.0), options);
  const double diff = out.farther.energy - out.closer.energy;
  out.force = -diff / (2.0 * out.step);
  // The [0, kappa_min] estimates are strongly correlated between the two
  // energies, so only their difference enters the error of the force.
  const double err = out.farther.quadrature_error + out.closer.quadrature_error + out.farther.tail_bound +
                     out.closer.tail_bound + std::abs(out.farther.sliver - out.closer.sliver);
  out.error_estimate = err / (2.0 * out.step);
  if (err > std::abs(diff)) {
    throw NumericalError("casimir_force: energy error " + std::to_string(err) +
                         " exceeds the energy difference " + std::to_string(std::abs(diff)) +
                         "; the force is unreliable");
  }
  return out;
}

// ---------------------------------------------------------------------------
// real axis

struct RelShiftSample {
  double lambda = 0.0;
  double epsilon = 0.0;  // offset actually used
  double xi_rel = 0.0;
  bool retried = false;
  bool branch_ok = true;
};

/// xi_rel(lambda) ~ -(1/pi) Im Xi(lambda + i epsilon) on a planar scene. A
/// factorization failure is retried once at 2 epsilon.
inline std::vector<RelShiftSample> xi_real_axis(const Scene& scene, const std::vector<double>& lambdas,
                                                double epsilon = 0.05, const SweepOptions& options = {}) {
  if (scene.dimension() != 2) throw SceneError("xi_real_axis: planar scene required");
  if (!(epsilon > 0.0)) throw ConfigError("xi_real_axis: epsilon must be positive");
  for (double l : lambdas) {
    if (!(l > 0.0)) throw InputError("xi_real_axis: lambda values must be positive");
  }
  auto one = [&](std::size_t i) {
    RelShiftSample s;
    s.lambda = lambdas[i];
    XiOptions xo;
    xo.n = options.n;
    for (double eps : {epsilon, 2.0 * epsilon}) {
      try {
        const XiSample x = xi_eval(scene, cplx(lambdas[i], eps), xo);
        s.epsilon = eps;
        s.xi_rel = -x.xi.imag() / std::numbers::pi;
        s.branch_ok = x.branch_ok;
        return s;
      } catch (const NumericalError& e) {
        if (eps != epsilon) throw;
        std::fprintf(stderr, "warning: xi_real_axis retrying lambda=%.17g at epsilon=%.17g (%s)\n", lambdas[i],
                     2.0 * epsilon, e.what());
        s.retried = true;
      }
    }
    return s;
  };
  return parallel_map<RelShiftSample>(lambdas.size(), options.threads, one);
}

// ---------------------------------------------------------------------------
// wave trace

struct WaveTraceSingularity {
  double t_star = 0.0;        // 2 delta
  double coefficient = 0.0;   // sum over shortest orbits of delta / (pi |det(I - P)|^{1/2})
  double measured_peak = 0.0;
  double peak_magnitude = 0.0;
  double noise_floor = 0.0;
  bool detected = false;
  std::vector<double> t_grid;
  std::vector<double> transform;
};

/// Windowed sine transform S(t) = sum_k w(lambda_k) xi_rel(lambda_k) sin(lambda_k t) dlambda
/// with the half-Hann window w = cos^2(pi lambda / (2 lambda_max)), and its
/// largest peak for t > 0.
inline WaveTraceSingularity wave_trace_demo(const std::vector<RelShiftSample>& samples,
                                            const std::vector<double>& t_grid, double delta,
                                            const std::vector<BouncingBallOrbit>& orbits = {}) {
  if (samples.size() < 8) throw InputError("wave_trace_demo: grid too short (need at least 8 samples)");
  if (t_grid.empty()) throw InputError("wave_trace_demo: empty t grid");
  if (!(delta > 0.0)) throw InputError("wave_trace_demo: delta must be positive");
  const double spacing = samples[1].lambda - samples[0].lambda;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double d = samples[k].lambda - samples[k - 1].lambda;
    if (!(std::abs(d - spacing) <= 1e-9 * std::max(1.0, std::abs(spacing))) || !(d > 0.0)) {
      throw InputError("wave_trace_demo: lambda grid must be uniform and increasing");
    }
  }
  const double lambda_max = samples.back().lambda;
  if (2.0 * delta * lambda_max < 80.0) {
    throw InputError("wave_trace_demo: grid too short, need 2 delta lambda_max >= 80");
  }
  WaveTraceSingularity out;
  out.t_star = 2.0 * delta;
  for (const auto& o : orbits) {
    if (o.shortest && o.det_factor > 0.0) out.coefficient += chord_length(o) / (std::numbers::pi * std::sqrt(o.det_factor));
  }
  out.t_grid = t_grid;
  out.transform.assign(t_grid.size(), 0.0);
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    double sum = 0.0;
    for (const auto& s : samples) {
      const double c = std::cos(0.5 * std::numbers::pi * s.lambda / lambda_max);
      sum += c * c * s.xi_rel * std::sin(s.lambda * t_grid[j]);
    }
    out.transform[j] = sum * spacing;
  }
  std::vector<double> mags;
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    if (t_grid[j] > 0.0) mags.push_back(std::abs(out.transform[j]));
  }
  if (mags.empty()) throw InputError("wave_trace_demo: t grid has no positive points");
  std::vector<double> sorted = mags;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.noise_floor = std::max(2.0 * sorted[sorted.size() / 2], 1e-300);
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    if (!(t_grid[j] > 0.0)) continue;
    const double m = std::abs(out.transform[j]);
    if (m > out.peak_magnitude) {
      out.peak_magnitude = m;
      out.measured_peak = t_grid[j];
    }
  }
  out.detected = out.peak_magnitude > out.noise_floor;
  return out;
}

// ---------------------------------------------------------------------------
// flat reports

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string report(const EnergyResult& e) {
  std::string s;
  s += "energy=" + format_value(e.energy) + "\n";
  s += "abs_error_estimate=" + format_value(e.abs_error_estimate) + "\n";
  s += "quadrature_error=" + format_value(e.quadrature_error) + "\n";
  s += "kappa_min=" + format_value(e.kappa_min) + "\n";
  s += "kappa_max=" + format_value(e.kappa_max) + "\n";
  s += "tail_bound=" + format_value(e.tail_bound) + "\n";
  s += "tail_prefactor=" + format_value(e.tail_prefactor) + "\n";
  s += "sliver=" + format_value(e.sliver) + "\n";
  s += "evaluations=" + std::to_string(e.evaluations) + "\n";
  return s;
}

inline std::string report(const AsymptoticFit& f) {
  std::string s;
  s += "slope=" + format_value(f.slope) + "\n";
  s += "intercept=" + format_value(f.intercept) + "\n";
  s += "prefactor=" + format_value(f.prefactor) + "\n";
  s += "correction=" + format_value(f.correction) + "\n";
  s += "slope_residual=" + format_value(f.slope_residual) + "\n";
  s += "prefactor_residual=" + format_value(f.prefactor_residual) + "\n";
  s += "kappa_min=" + format_value(f.kappa_min) + "\n";
  s += "kappa_max=" + format_value(f.kappa_max) + "\n";
  s += "samples_used=" + std::to_string(f.used) + "\n";
  s += "samples_excluded=" + std::to_string(f.excluded) + "\n";
  return s;
}

}  // namespace relxi
