#pragma once

// Maximum-entropy phase distribution matching a finite set of exponential
// phase moments: p(phi) = exp(sum_k a_k cos k phi + b_k sin k phi - log Z).

#include <complex>
#include <span>
#include <vector>

#include "nphase/errors.hpp"

namespace nphase::maxent {

using cplx = std::complex<double>;

struct PhaseDistribution {
  std::vector<double> grid;     // 2 pi j / n_phi
  std::vector<double> density;  // normalized on the periodic grid
  std::vector<double> a, b;     // multipliers of cos k phi, sin k phi, k = 1..K
  double log_z = 0.0;
  int iterations = 0;
  std::vector<double> residuals;  // model - target, (re_1, im_1, re_2, ...)
  bool shrunk = false;            // boundary moments were pulled inside
  double min_hessian_eigenvalue = 0.0;

  int order() const noexcept { return static_cast<int>(a.size()); }
  double max_residual() const;
  /// -\int p log p
  double entropy() const;
  /// exp(sum a_k cos k phi + b_k sin k phi - log_z) at any phi.
  double model_density(double phi) const;
};

struct MaxentOptions {
  int n_phi = 1024;
  double tol = 1e-10;
  int max_iter = 100;
};

/// Damped Newton iteration on the dual. |Psi_k| > 1 + 1e-9 is infeasible;
/// 1 <= |Psi_k| <= 1 + 1e-9 is treated as rounding onto the boundary and
/// scaled to 1 - 1e-9 (flagged in `shrunk`).
PhaseDistribution reconstruct_phase_dist(std::span<const cplx> moments, const MaxentOptions& opts = {});

}  // namespace nphase::maxent
