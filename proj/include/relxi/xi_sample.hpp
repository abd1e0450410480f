#pragma once

#include <complex>
#include <limits>

namespace relxi {

using cplx = std::complex<double>;

/// One evaluation of Xi at a spectral point.
struct XiSample {
  cplx lambda;
  cplx xi;
  int n = 0;  // nodes per obstacle (2D) or harmonic truncation L (3D)
  double error_estimate = std::numeric_limits<double>::quiet_NaN();
  // False if some eigenvalue of I + M left the right half-plane, i.e. the
  // principal-branch sum may not be continuous in lambda there.
  bool branch_ok = true;
  // 3D only: false when |Xi_L - Xi_{L+2}| > 1e-6 |Xi_L|.
  bool converged = true;
};

}  // namespace relxi
