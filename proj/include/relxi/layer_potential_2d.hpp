#pragma once

// Nystrom discretization of the 2D single-layer operator and the relative
// determinant Xi(lambda) = log det(Q Q~^{-1}) for scenes of planar obstacles.
//
// Self blocks use product integration against the reference kernel
// K0(kappa_ref * 2 rho |sin((t-s)/2)|) / 2pi, whose Fourier coefficients are
// I_m K_m(kappa_ref rho) / 2pi. The true kernel is written as
// M1 * reference + M2 with M1 = J(r) / I0(kappa_ref r_ref) carrying the
// logarithmic singularity and M2 smooth. For a circle of radius rho on the
// imaginary axis M1 = 1 and M2 = 0. Cross blocks use the trapezoidal rule.
//
// Matrices are stored in the symmetrized basis W^{1/2} A W^{-1/2} (W the
// trapezoid weights), so on lambda = i kappa every block is real and the
// self blocks are exactly symmetric.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "relxi/error.hpp"
#include "relxi/geometry.hpp"
#include "relxi/special_functions.hpp"
#include "relxi/xi_sample.hpp"

namespace relxi {

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Kernel on the positive imaginary axis lambda = i kappa: K0(kappa r) / 2pi.
struct ImaginaryAxisKernel {
  using Scalar = double;
  double kappa;

  Scalar operator()(double r) const { return special::bessel_k0(kappa * r) / kTwoPi; }
  // J(r) / I0(kref * rref), where the kernel is -J(r) log(r) / 2pi + smooth.
  Scalar singular_ratio(double r, double kref, double rref) const {
    return special::bessel_i0_scaled(kappa * r) / special::bessel_i0_scaled(kref * rref) *
           std::exp(kappa * r - kref * rref);
  }
  // Smooth part of the kernel at r = 0.
  Scalar regular_at_zero() const {
    return (std::numbers::ln2 - special::kEulerGamma - std::log(kappa)) / kTwoPi;
  }
  double reference_kappa(double /*rho*/) const { return kappa; }
};

/// Helmholtz kernel (i/4) H0^(1)(lambda r) for Im lambda > 0.
struct HelmholtzKernel {
  using Scalar = cplx;
  cplx lambda;

  Scalar operator()(double r) const { return cplx(0.0, 0.25) * special::hankel1_0(lambda * r); }
  Scalar singular_ratio(double r, double kref, double rref) const {
    return special::bessel_j0(lambda * r) / special::bessel_i0_scaled(kref * rref) *
           std::exp(-kref * rref);
  }
  Scalar regular_at_zero() const {
    return cplx(0.0, 0.25) - (std::log(lambda / 2.0) + special::kEulerGamma) / kTwoPi;
  }
  double reference_kappa(double rho) const { return std::max(lambda.imag(), 1.0 / rho); }
};

/// Nystrom nodes of one planar obstacle.
struct NodeSet {
  std::vector<double> parameter;
  std::vector<Vec2> position;
  std::vector<double> speed;  // |x'(t)|
  int size() const { return static_cast<int>(position.size()); }
  double weight(int i) const { return kTwoPi / size() * speed[i]; }
};

inline NodeSet nystrom_nodes(const ObstacleShape& shape, int n) {
  if (shape_dimension(shape) != 2) throw ConfigError("nystrom_nodes: planar obstacle required");
  if (n < 16 || n % 2 != 0) {
    throw ConfigError("quadrature size must be even and >= 16, got " + std::to_string(n));
  }
  NodeSet nodes;
  nodes.parameter.resize(n);
  nodes.position.resize(n);
  nodes.speed.resize(n);
  for (int j = 0; j < n; ++j) {
    const double t = kTwoPi * j / n;
    const CurveJet jet = curve_jet(shape, t);
    nodes.parameter[j] = t;
    nodes.position[j] = jet.x;
    nodes.speed[j] = jet.dx.norm();
  }
  return nodes;
}

/// Product weights W(2 pi k / n), k = 0..n-1, for
/// int_0^{2pi} K0(kref 2 rho |sin((t-s)/2)|) / 2pi f(s) ds on n uniform nodes.
inline std::vector<double> reference_weights(int n, double kref, double rho) {
  const int half = n / 2;
  const std::vector<double> ik = special::bessel_ik_products(kref * rho, half);
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) {
    const double u = kTwoPi * k / n;
    double sum = ik[0] + ik[half] * std::cos(half * u);
    for (int m = 1; m < half; ++m) sum += 2.0 * ik[m] * std::cos(m * u);
    w[k] = sum / n;
  }
  return w;
}

/// Length scale rho of the reference kernel: the radius for a circle, the
/// maximal speed otherwise.
inline double reference_length(const NodeSet& nodes) {
  return *std::max_element(nodes.speed.begin(), nodes.speed.end());
}

namespace detail {

inline void check_lambda(cplx lambda) {
  if (!(lambda.imag() > 0.0)) {
    throw DomainError("single-layer assembly requires Im(lambda) > 0, got lambda = (" +
                      std::to_string(lambda.real()) + ", " + std::to_string(lambda.imag()) + ")");
  }
}

}  // namespace detail

template <class Kernel>
Eigen::Matrix<typename Kernel::Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_self_block(
    const NodeSet& nodes, const Kernel& kernel) {
  using Scalar = typename Kernel::Scalar;
  const int n = nodes.size();
  const double rho = reference_length(nodes);
  const double kref = kernel.reference_kappa(rho);
  const std::vector<double> rw = reference_weights(n, kref, rho);
  const double tw = kTwoPi / n;
  const Scalar diag_shift = kernel.regular_at_zero() -
                            (std::numbers::ln2 - special::kEulerGamma - std::log(kref)) / kTwoPi;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a(n, n);
  for (int i = 0; i < n; ++i) {
    const double si = nodes.speed[i];
    a(i, i) = si * (rw[0] + tw * (diag_shift - std::log(si / rho) / kTwoPi));
    for (int j = i + 1; j < n; ++j) {
      const double r = (nodes.position[i] - nodes.position[j]).norm();
      const double rref = 2.0 * rho * std::abs(std::sin(0.5 * (nodes.parameter[i] - nodes.parameter[j])));
      const Scalar m1 = kernel.singular_ratio(r, kref, rref);
      const Scalar m2 = kernel(r) - m1 * (special::bessel_k0(kref * rref) / kTwoPi);
      const Scalar v = std::sqrt(si * nodes.speed[j]) * (rw[j - i] * m1 + tw * m2);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

template <class Kernel>
Eigen::Matrix<typename Kernel::Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_cross_block(
    const NodeSet& rows, const NodeSet& cols, const Kernel& kernel) {
  using Scalar = typename Kernel::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c(rows.size(), cols.size());
  for (int i = 0; i < rows.size(); ++i) {
    const double wi = rows.weight(i);
    for (int j = 0; j < cols.size(); ++j) {
      const double r = (rows.position[i] - cols.position[j]).norm();
      c(i, j) = std::sqrt(wi * cols.weight(j)) * kernel(r);
    }
  }
  return c;
}

/// Self block on lambda = i kappa (real, symmetric).
inline RealMatrix assemble_self_block(const ObstacleShape& shape, int n, double kappa) {
  if (!(kappa > 0.0)) throw DomainError("assemble_self_block: kappa must be positive");
  return assemble_self_block(nystrom_nodes(shape, n), ImaginaryAxisKernel{kappa});
}

/// Self block for general Im(lambda) > 0.
inline ComplexMatrix assemble_self_block(const ObstacleShape& shape, int n, cplx lambda) {
  detail::check_lambda(lambda);
  return assemble_self_block(nystrom_nodes(shape, n), HelmholtzKernel{lambda});
}

inline RealMatrix assemble_cross_block(const ObstacleShape& a, const ObstacleShape& b, int na,
                                       int nb, double kappa) {
  if (!(kappa > 0.0)) throw DomainError("assemble_cross_block: kappa must be positive");
  return assemble_cross_block(nystrom_nodes(a, na), nystrom_nodes(b, nb), ImaginaryAxisKernel{kappa});
}

inline ComplexMatrix assemble_cross_block(const ObstacleShape& a, const ObstacleShape& b, int na,
                                          int nb, cplx lambda) {
  detail::check_lambda(lambda);
  return assemble_cross_block(nystrom_nodes(a, na), nystrom_nodes(b, nb), HelmholtzKernel{lambda});
}

/// Discretized operator blocks of a scene at one spectral point.
template <class Scalar>
struct OperatorBlocks {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  cplx lambda;
  std::vector<NodeSet> grids;
  std::vector<Matrix> self_blocks;
  // cross_blocks[j][k] for j != k; empty on the diagonal.
  std::vector<std::vector<Matrix>> cross_blocks;
};

template <class Kernel>
OperatorBlocks<typename Kernel::Scalar> assemble_blocks(const Scene& scene,
                                                        const std::vector<int>& sizes,
                                                        const Kernel& kernel, cplx lambda) {
  OperatorBlocks<typename Kernel::Scalar> blocks;
  blocks.lambda = lambda;
  const std::size_t count = scene.size();
  for (std::size_t j = 0; j < count; ++j) blocks.grids.push_back(nystrom_nodes(scene.obstacle(j), sizes[j]));
  for (std::size_t j = 0; j < count; ++j) blocks.self_blocks.push_back(assemble_self_block(blocks.grids[j], kernel));
  blocks.cross_blocks.assign(count, std::vector<typename OperatorBlocks<typename Kernel::Scalar>::Matrix>(count));
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = j + 1; k < count; ++k) {
      blocks.cross_blocks[j][k] = assemble_cross_block(blocks.grids[j], blocks.grids[k], kernel);
      blocks.cross_blocks[k][j] = blocks.cross_blocks[j][k].transpose();
    }
  }
  return blocks;
}

enum class XiMethod {
  automatic,   // Schur form for two obstacles, full block form otherwise
  schur,       // log det(I - Q11^{-1} C12 Q22^{-1} C21); two obstacles only
  full_block,  // log det(I + Q~^{-1} C)
};

struct XiOptions {
  int n = 0;                      // nodes per obstacle; 0 selects the default rule
  bool estimate_error = false;    // compare against 2n
  XiMethod method = XiMethod::automatic;
  bool force_complex = false;     // use the complex path even on the imaginary axis
};


/// Default quadrature size: 16 nodes per wavelength-equivalent at |lambda|, at least 64.
inline int default_quadrature_size(const ObstacleShape& shape, cplx lambda) {
  double perimeter = 0.0;
  for (const auto& s : boundary_sample(shape, 256)) perimeter += s.weight;
  const double wavelengths = std::abs(lambda) * perimeter / kTwoPi;
  int n = static_cast<int>(std::ceil(16.0 * wavelengths));
  n = std::max(n, 64);
  return n + (n % 2);
}

namespace detail {

// log(1 + z) without cancellation for small |z|.
inline cplx log1p_complex(cplx z) {
  const cplx u = 1.0 + z;
  if (u == 1.0) return z;
  return std::log(u) * (z / (u - 1.0));
}

struct LogDet {
  cplx value;
  bool branch_ok = true;
};

template <class Vec>
LogDet sum_log1p(const Vec& mu, double sign) {
  LogDet out{cplx(0.0), true};
  // Accumulate from smallest to largest magnitude in a fixed order.
  std::vector<cplx> v(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) v[i] = sign * cplx(mu(i));
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
    return std::abs(a) < std::abs(b) || (std::abs(a) == std::abs(b) && (a.real() < b.real() ||
                                                                        (a.real() == b.real() && a.imag() < b.imag())));
  });
  for (const cplx& z : v) {
    if (!((1.0 + z).real() > 0.0)) out.branch_ok = false;
    out.value += log1p_complex(z);
  }
  return out;
}

// Imaginary axis: blocks are real symmetric and (in exact arithmetic)
// positive definite, so Q~ = L L^T and everything reduces to symmetric
// eigenproblems.
inline LogDet logdet_real(const OperatorBlocks<double>& b, XiMethod method) {
  const std::size_t count = b.self_blocks.size();
  std::vector<Eigen::LLT<RealMatrix>> chol;
  for (std::size_t j = 0; j < count; ++j) {
    chol.emplace_back(b.self_blocks[j]);
    if (chol.back().info() != Eigen::Success) {
      throw NumericalError("layer_potential_2d: self block of obstacle " + std::to_string(j) +
                           " is not positive definite on the imaginary axis");
    }
  }
  if (method == XiMethod::schur) {
    // B = L1^{-1} C12 L2^{-T};  det(I - B B^T)
    RealMatrix bm = chol[0].matrixL().solve(b.cross_blocks[0][1]);
    bm = chol[1].matrixL().solve(bm.transpose()).transpose();
    const RealMatrix gram = bm * bm.transpose();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram, Eigen::EigenvaluesOnly);
    return sum_log1p(es.eigenvalues(), -1.0);
  }
  std::vector<Eigen::Index> offset(count + 1, 0);
  for (std::size_t j = 0; j < count; ++j) offset[j + 1] = offset[j] + b.self_blocks[j].rows();
  RealMatrix h = RealMatrix::Zero(offset[count], offset[count]);
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = j + 1; k < count; ++k) {
      RealMatrix blk = chol[j].matrixL().solve(b.cross_blocks[j][k]);
      blk = chol[k].matrixL().solve(blk.transpose()).transpose();
      h.block(offset[j], offset[k], blk.rows(), blk.cols()) = blk;
      h.block(offset[k], offset[j], blk.cols(), blk.rows()) = blk.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h, Eigen::EigenvaluesOnly);
  return sum_log1p(es.eigenvalues(), 1.0);
}

inline LogDet logdet_complex(const OperatorBlocks<cplx>& b, XiMethod method) {
  const std::size_t count = b.self_blocks.size();
  std::vector<Eigen::PartialPivLU<ComplexMatrix>> lu;
  for (std::size_t j = 0; j < count; ++j) {
    lu.emplace_back(b.self_blocks[j]);
    const double rcond = lu.back().rcond();
    if (!(rcond > 1e-14)) {
      throw NumericalError("layer_potential_2d: self block of obstacle " + std::to_string(j) +
                           " is numerically singular (rcond " + std::to_string(rcond) +
                           "); lambda is too close to a resonance of that obstacle");
    }
  }
  if (method == XiMethod::schur) {
    // Nonzero eigenvalues of Q11^{-1} C12 Q22^{-1} C21 through a rank-revealing
    // factorization C12 P = Q R, truncated where |R_kk| drops below 1e-16 |R_00|.
    const ComplexMatrix& c12 = b.cross_blocks[0][1];
    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(c12);
    const ComplexMatrix r_full = qr.matrixR().template triangularView<Eigen::Upper>();
    const double r0 = std::abs(r_full(0, 0));
    Eigen::Index rank = 0;
    while (rank < std::min(r_full.rows(), r_full.cols()) && std::abs(r_full(rank, rank)) > 1e-16 * r0) {
      ++rank;
    }
    if (rank == 0) return {cplx(0.0), true};
    const ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(c12.rows(), rank);
    const ComplexMatrix rp = r_full.topRows(rank) * qr.colsPermutation().transpose();
    const ComplexMatrix x = lu[1].solve(b.cross_blocks[1][0]);   // Q22^{-1} C21
    const ComplexMatrix left = rp * x;                            // rank x n1
    const ComplexMatrix right = lu[0].solve(q);                   // n1 x rank
    const ComplexMatrix small = left * right;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(small, false);
    return sum_log1p(es.eigenvalues(), -1.0);
  }
  std::vector<Eigen::Index> offset(count + 1, 0);
  for (std::size_t j = 0; j < count; ++j) offset[j + 1] = offset[j] + b.self_blocks[j].rows();
  ComplexMatrix m = ComplexMatrix::Zero(offset[count], offset[count]);
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = 0; k < count; ++k) {
      if (j == k) continue;
      m.block(offset[j], offset[k], b.self_blocks[j].rows(), b.self_blocks[k].rows()) =
          lu[j].solve(b.cross_blocks[j][k]);
    }
  }
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, false);
  return sum_log1p(es.eigenvalues(), 1.0);
}

}  // namespace detail

/// Xi(lambda) for a planar scene with two or more obstacles.
inline XiSample xi_eval(const Scene& scene, cplx lambda, const XiOptions& options = {}) {
  if (scene.dimension() != 2) throw SceneError("xi_eval: planar scene required (use xi_eval_3d for spheres)");
  if (scene.size() < 2) throw SceneError("xi_eval: need at least two obstacles");
  detail::check_lambda(lambda);
  XiMethod method = options.method;
  if (method == XiMethod::automatic) method = scene.size() == 2 ? XiMethod::schur : XiMethod::full_block;
  if (method == XiMethod::schur && scene.size() != 2) {
    throw ConfigError("xi_eval: the Schur form needs exactly two obstacles");
  }

  auto evaluate = [&](int n_override) {
    std::vector<int> sizes(scene.size());
    for (std::size_t j = 0; j < scene.size(); ++j) {
      sizes[j] = n_override > 0 ? n_override : default_quadrature_size(scene.obstacle(j), lambda);
    }
    const bool on_axis = lambda.real() == 0.0 && !options.force_complex;
    if (on_axis) {
      const auto blocks = assemble_blocks(scene, sizes, ImaginaryAxisKernel{lambda.imag()}, lambda);
      return std::pair{detail::logdet_real(blocks, method), sizes[0]};
    }
    const auto blocks = assemble_blocks(scene, sizes, HelmholtzKernel{lambda}, lambda);
    return std::pair{detail::logdet_complex(blocks, method), sizes[0]};
  };

  const auto [det, n_used] = evaluate(options.n);
  XiSample sample;
  sample.lambda = lambda;
  sample.xi = det.value;
  sample.n = n_used;
  sample.branch_ok = det.branch_ok;
  if (options.estimate_error) {
    const auto [fine, n_fine] = evaluate(2 * n_used);
    sample.error_estimate = std::abs(fine.value - det.value);
  }
  return sample;
}

/// Xi(i kappa), the real-valued imaginary-axis specialization.
inline XiSample xi_eval_imag(const Scene& scene, double kappa, const XiOptions& options = {}) {
  if (!(kappa > 0.0)) throw DomainError("xi_eval: kappa must be positive");
  return xi_eval(scene, cplx(0.0, kappa), options);
}

}  // namespace relxi
