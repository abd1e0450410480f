#pragma once

// Bessel-family kernels for the Helmholtz / Yukawa single-layer potentials.
//
// Real K0, K1 use the power series for x <= 2 and Steed's continued fraction
// (Temme's CF2) above. The complex K0 behind the Hankel function adds a
// large-argument asymptotic branch for |w| > 25. All routines are pure.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "relxi/error.hpp"

namespace relxi::special {

using cplx = std::complex<double>;

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Seams between evaluation branches; exposed so tests can probe continuity.
inline constexpr double kSeriesLimit = 2.0;
inline constexpr double kAsymptoticLimit = 25.0;

namespace detail {

template <class T>
double magnitude(const T& v) {
  return static_cast<double>(std::abs(v));
}

// K0 and K1 from the ascending series (valid for any argument off the cut,
// accurate for |w| <= 2).
template <class T>
std::pair<T, T> k01_series(const T& w) {
  const T y = w * w / 4.0;
  const T lg = std::log(w / 2.0);
  // I0, I1 and the digamma-weighted sums in one pass.
  T term0 = T(1.0);        // y^k / (k!)^2
  T term1 = w / 2.0;       // (w/2) y^k / (k!(k+1)!)
  T i0 = term0, i1 = term1;
  double harmonic = 0.0;   // H_k
  T sum0 = T(0.0);         // sum H_k y^k/(k!)^2
  T sum1 = T(-2.0 * kEulerGamma + 1.0) * term1;  // (psi(k+1)+psi(k+2)) weighted
  for (int k = 1; k < 200; ++k) {
    term0 *= y / (static_cast<double>(k) * k);
    term1 *= y / (static_cast<double>(k) * (k + 1));
    harmonic += 1.0 / k;
    const double psi_pair = -2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (k + 1);
    i0 += term0;
    i1 += term1;
    sum0 += harmonic * term0;
    sum1 += psi_pair * term1;
    if (magnitude(term0) < 1e-18 * magnitude(i0) && magnitude(term1) < 1e-18 * magnitude(i1)) {
      break;
    }
  }
  const T k0 = -(lg + kEulerGamma) * i0 + sum0;
  const T k1 = T(1.0) / w + lg * i1 - 0.5 * sum1;
  return {k0, k1};
}

// Steed's algorithm for e^w K0(w), e^w K1(w) (Thompson & Barnett). Works for
// complex arguments with Re w > 0 and somewhat beyond.
template <class T>
std::pair<T, T> k01_continued_fraction_scaled(const T& w) {
  constexpr double kEps = 1e-17;
  constexpr int kMaxIter = 100000;
  const double a1 = 0.25;
  T b = 2.0 * (1.0 + w);
  T d = T(1.0) / b;
  T h = d;
  T delh = d;
  T q1 = T(0.0), q2 = T(1.0);
  T q = T(a1), c = T(a1);
  double a = -a1;
  T s = 1.0 + q * delh;
  int i = 1;
  for (; i <= kMaxIter; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const T qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = T(1.0) / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const T dels = q * delh;
    s += dels;
    if (magnitude(dels) < kEps * magnitude(s)) break;
  }
  if (i > kMaxIter) {
    throw NumericalError("special_functions: K0/K1 continued fraction did not converge");
  }
  const T k0 = std::sqrt(std::numbers::pi / (2.0 * w)) / s;
  const T k1 = k0 * (w + 0.5 - a1 * h) / w;
  return {k0, k1};
}

template <class T>
std::pair<T, T> k01_continued_fraction(const T& w) {
  const auto [k0, k1] = k01_continued_fraction_scaled(w);
  const T e = std::exp(-w);
  return {k0 * e, k1 * e};
}

inline cplx k0_asymptotic(cplx w) {
  // K0(w) ~ sqrt(pi/2w) e^{-w} sum_k prod_{j<=k} (-(2j-1)^2) / (k! (8w)^k)
  cplx sum = 1.0, term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(odd * odd) / (k * 8.0 * w);
    const double mag = std::abs(term);
    if (mag > prev) break;  // past the smallest term of the divergent series
    sum += term;
    prev = mag;
    if (mag < 1e-17) break;
  }
  return std::sqrt(std::numbers::pi / (2.0 * w)) * std::exp(-w) * sum;
}

inline double i0_series(double x) {
  const double y = x * x / 4.0;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 1000; ++k) {
    term *= y / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

inline double i0_asymptotic_scaled(double x) {
  double sum = 1.0, term = 1.0, prev = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (odd * odd) / (k * 8.0 * x);
    if (term > prev) break;
    sum += term;
    prev = term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

inline double i0_asymptotic(double x) { return std::exp(x) * i0_asymptotic_scaled(x); }

inline cplx j0_series(cplx z) {
  const cplx y = -z * z / 4.0;
  cplx term = 1.0, sum = 1.0;
  for (int k = 1; k < 400; ++k) {
    term *= y / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace detail

/// Modified Bessel function of the second kind K_order(x), order 0 or 1, x > 0.
inline double bessel_k(int order, double x) {
  if (order != 0 && order != 1) {
    throw DomainError("bessel_k: order must be 0 or 1, got " + std::to_string(order));
  }
  if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
  if (x > 745.0) return 0.0;
  const auto [k0, k1] = x <= kSeriesLimit ? detail::k01_series(x) : detail::k01_continued_fraction(x);
  return order == 0 ? k0 : k1;
}

inline double bessel_k0(double x) { return bessel_k(0, x); }
inline double bessel_k1(double x) { return bessel_k(1, x); }

/// e^{x} K_order(x), finite for all x > 0.
inline double bessel_k_scaled(int order, double x) {
  if (order != 0 && order != 1) throw DomainError("bessel_k_scaled: order must be 0 or 1");
  if (!(x > 0.0)) throw DomainError("bessel_k_scaled: argument must be positive");
  if (x <= kSeriesLimit) {
    const auto [k0, k1] = detail::k01_series(x);
    return std::exp(x) * (order == 0 ? k0 : k1);
  }
  const auto [k0, k1] = detail::k01_continued_fraction_scaled(x);
  return order == 0 ? k0 : k1;
}

/// e^{-|x|} I0(x).
inline double bessel_i0_scaled(double x) {
  x = std::abs(x);
  return x <= 20.0 ? detail::i0_series(x) * std::exp(-x) : detail::i0_asymptotic_scaled(x);
}

/// I_m(x) K_m(x) for m = 0..m_max, x > 0, by ratio recurrences (no overflow).
inline std::vector<double> bessel_ik_products(double x, int m_max) {
  if (!(x > 0.0)) throw DomainError("bessel_ik_products: argument must be positive");
  if (m_max < 0) throw DomainError("bessel_ik_products: negative order");
  std::vector<double> p(m_max + 1);
  // e^{-x} I0(x) and e^{x} K0(x), K1/K0.
  const double i0e = bessel_i0_scaled(x);
  const double k0e = bessel_k_scaled(0, x);
  const double k1e = bessel_k_scaled(1, x);
  p[0] = i0e * k0e;
  if (m_max == 0) return p;
  // r_m = I_m / I_{m-1} from the downward recurrence.
  const int start = m_max + 60 + static_cast<int>(std::ceil(x));
  std::vector<double> ratio(m_max + 1, 0.0);
  double r = 0.0;
  for (int m = start; m >= 1; --m) {
    r = 1.0 / (2.0 * m / x + r);
    if (m <= m_max) ratio[m] = r;
  }
  double q = k1e / k0e;  // K_{m+1} / K_m at m = 0
  for (int m = 1; m <= m_max; ++m) {
    p[m] = p[m - 1] * ratio[m] * q;
    q = 1.0 / q + 2.0 * m / x;
  }
  return p;
}

/// Modified Bessel function I0(x) for real x.
inline double bessel_i0(double x) {
  x = std::abs(x);
  return x <= 20.0 ? detail::i0_series(x) : detail::i0_asymptotic(x);
}

/// Complex K0(w) for Re w >= 0, the half-plane reached by the Helmholtz kernel
/// with Im(lambda) >= 0.
inline cplx bessel_k0(cplx w) {
  if (w == cplx(0.0)) throw DomainError("bessel_k0: zero argument");
  const double r = std::abs(w);
  if (r <= kSeriesLimit) return detail::k01_series(w).first;
  if (r <= kAsymptoticLimit) return detail::k01_continued_fraction(w).first;
  return detail::k0_asymptotic(w);
}

/// Hankel function H0^(1)(z) on the closed upper half-plane without 0.
inline cplx hankel1_0(cplx z) {
  if (z == cplx(0.0)) throw DomainError("hankel1_0: zero argument");
  if (z.imag() < 0.0) throw DomainError("hankel1_0: Im z < 0 is outside the supported region");
  // H0^(1)(z) = (2 / (i pi)) K0(-i z)
  return cplx(0.0, -2.0 / std::numbers::pi) * bessel_k0(cplx(z.imag(), -z.real()));
}

/// Bessel J0(z) for Re z >= 0, Im z >= 0.
inline cplx bessel_j0(cplx z) {
  const double r = std::abs(z);
  // Series is cancellation-free enough once the argument leans toward i*R+.
  if (r <= 8.0 || (r <= kAsymptoticLimit && z.imag() > z.real())) return detail::j0_series(z);
  // J0 = (H1 + H2)/2 = (i/pi)(K0(iz) - K0(-iz))
  const cplx iz(-z.imag(), z.real());
  return cplx(0.0, 1.0 / std::numbers::pi) * (bessel_k0(iz) - bessel_k0(-iz));
}

enum class SphKind { i, k };

inline constexpr int kMaxSphOrder = 60;

namespace detail {

// Modified spherical Bessel functions in extended precision, convention
// i_0 = sinh(x)/x, k_0 = e^{-x}/x. Returned values carry the factor
// e^{-x} (for i) and e^{x} (for k) removed, so they stay finite for large x.
inline long double sph_i_scaled(int l, long double x) {
  // Downward ratio recurrence r_j = i_j / i_{j-1} = 1 / ((2j+1)/x + r_{j+1}).
  const int start = l + 40 + static_cast<int>(std::ceil(static_cast<double>(x)));
  long double ratio = 0.0L;
  long double product = 1.0L;
  for (int j = start; j >= 1; --j) {
    ratio = 1.0L / ((2.0L * j + 1.0L) / x + ratio);
    if (j <= l) product *= ratio;
  }
  // e^{-x} sinh(x)/x
  const long double i0s = -std::expm1(-2.0L * x) / (2.0L * x);
  return i0s * product;
}

inline long double sph_k_scaled(int l, long double x) {
  long double km = 1.0L / x;                  // e^x k_0
  if (l == 0) return km;
  long double kc = (1.0L + x) / (x * x);      // e^x k_1
  for (int j = 1; j < l; ++j) {
    const long double kn = km + (2.0L * j + 1.0L) / x * kc;
    km = kc;
    kc = kn;
  }
  return kc;
}

inline void check_sph_args(int l, double x) {
  if (!(x > 0.0)) throw DomainError("mod_sph_bessel: argument must be positive");
  if (l < 0 || l > kMaxSphOrder) {
    throw DomainError("mod_sph_bessel: order out of range [0, 60]: " + std::to_string(l));
  }
}

}  // namespace detail

/// Modified spherical Bessel function i_l(x) or k_l(x), k_0(x) = e^{-x}/x.
inline double mod_sph_bessel(SphKind kind, int l, double x) {
  detail::check_sph_args(l, x);
  const long double lx = x;
  const double value = kind == SphKind::i
                           ? static_cast<double>(detail::sph_i_scaled(l, lx) * std::exp(lx))
                           : static_cast<double>(detail::sph_k_scaled(l, lx) * std::exp(-lx));
  if (!std::isfinite(value)) {
    throw RangeError("mod_sph_bessel: result overflows double at l = " + std::to_string(l) +
                     ", x = " + std::to_string(x));
  }
  return value;
}

/// i_l(x) k_l(x), computed without intermediate overflow.
inline double mod_sph_product(int l, double x) {
  detail::check_sph_args(l, x);
  const long double lx = x;
  return static_cast<double>(detail::sph_i_scaled(l, lx) * detail::sph_k_scaled(l, lx));
}

}  // namespace relxi::special
