#pragma once

// Special functions used by the sampling kernels: Hermite polynomials,
// harmonic-oscillator eigenfunctions, the confluent hypergeometric
// function for the parameter families the kernels need, and I0.

#include <cstddef>
#include <span>
#include <vector>

#include "nphase/errors.hpp"

namespace nphase::specfun {

/// Physicists' Hermite polynomial H_n(x). Throws RangeError on overflow.
double hermite(int n, double x);

/// Normalized oscillator eigenfunction psi_n(x) = (2^n n! sqrt(pi))^{-1/2} e^{-x^2/2} H_n(x),
/// evaluated with the normalized three-term recurrence (stable for n in the thousands).
double osc_eigenfunction(int n, double x);

/// Fills out[0..out.size()) with psi_0(x) .. psi_{out.size()-1}(x).
void osc_eigenfunctions(double x, std::span<double> out);

struct KummerOptions {
  /// |z| beyond which the large-argument asymptotic expansion is used.
  double asymptotic_threshold = 30.0;
  /// Relative tolerance for both branches.
  double tolerance = 1e-14;
};

/// Confluent hypergeometric function Phi(a, b, z) = 1F1(a; b; z) for real z <= 0.
///
/// Validated for 0 < a <= 3 and 0 < b <= 3 (covers the (1, 1/2), (2, 1/2),
/// (2, 3/2) families the kernels use). Negative z goes through the Kummer
/// transform e^z Phi(b - a, b, -z), whose series has sign-coherent tail terms,
/// and switches to the algebraic asymptotic expansion beyond the threshold.
/// Throws UnsupportedParameters outside that range and ConvergenceError when
/// neither branch reaches the tolerance.
double kummer_phi(double a, double b, double z, const KummerOptions& opts = {});

/// Modified Bessel function I0(t), t >= 0. Throws RangeError when e^t overflows.
double bessel_i0(double t);

/// e^{-t} I0(t), finite for every t >= 0.
double bessel_i0_scaled(double t);

/// Table of psi_n(x) for n <= max_index over a fixed grid. Immutable after
/// construction; safe to share between threads.
class OscillatorBasisCache {
 public:
  OscillatorBasisCache(int max_index, std::vector<double> grid);

  /// Symmetric grid -half_width..half_width with the given step (the step
  /// count is rounded up so the grid covers the requested width).
  static OscillatorBasisCache symmetric(int max_index, double half_width, double step);

  int max_index() const noexcept { return max_index_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  std::span<const double> row(int n) const;
  double value(int n, std::size_t i) const { return values_[static_cast<std::size_t>(n) * grid_.size() + i]; }

 private:
  int max_index_;
  std::vector<double> grid_;
  std::vector<double> values_;  // row-major, (max_index + 1) x grid.size()
};

}  // namespace nphase::specfun
