#include "nphase/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace nphase::specfun {

namespace {

constexpr double kPiQuarterInv = 0.75112554446494248286;  // pi^{-1/4}

bool is_nonpositive_integer(double c) { return c <= 0.0 && c == std::floor(c); }

// e^{-y} Phi(c, b, y) by its power series. Terms past n > max(c, y) share a
// sign and decrease, so the truncation test is safe there.
double transformed_series(double c, double b, double y, double tol) {
  double w = std::exp(-y);
  double sum = w;
  double peak = std::abs(w);
  const int max_terms = static_cast<int>(y + 60.0 * std::sqrt(y + 1.0)) + 200;
  for (int n = 0; n < max_terms; ++n) {
    w *= (c + n) / (b + n) * y / (n + 1);
    sum += w;
    peak = std::max(peak, std::abs(w));
    if (w == 0.0) return sum;  // terminating series
    if (n + 1 > y && n + 1 > c &&
        std::abs(w) <= tol * std::max(std::abs(sum), 1e-3 * peak)) {
      return sum;
    }
  }
  throw ConvergenceError("kummer_phi: power series did not converge", std::abs(w / sum));
}

// Gamma(b)/Gamma(b-a) y^{-a} sum_s (a)_s (a-b+1)_s / s! y^{-s}; returns NaN
// when the divergent tail starts growing before the tolerance is met.
double asymptotic_branch(double a, double b, double y, double tol) {
  const double e = a - b + 1.0;
  double term = 1.0;
  double sum = 1.0;
  for (int s = 0; s < 400; ++s) {
    const double next = term * (a + s) * (e + s) / ((s + 1) * y);
    if (std::abs(next) > std::abs(term) && s > 0) break;
    term = next;
    sum += term;
    if (std::abs(term) <= tol * std::abs(sum)) {
      return std::tgamma(b) / std::tgamma(b - a) * std::pow(y, -a) * sum;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double hermite(int n, double x) {
  if (n < 0) throw DomainError("hermite: negative order");
  if (!std::isfinite(x)) throw DomainError("hermite: non-finite argument");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
    if (!std::isfinite(cur)) {
      throw RangeError("hermite: H_" + std::to_string(n) + "(" + std::to_string(x) + ") overflows");
    }
  }
  return cur;
}

void osc_eigenfunctions(double x, std::span<double> out) {
  if (out.empty()) return;
  // psi_0 without its Gaussian factor; the factor is carried as a separate
  // log scale so that neither e^{-x^2/2} underflow nor growth of the
  // unscaled recurrence loses the result.
  double log_scale = -0.5 * x * x;
  double factor = std::exp(log_scale);
  double prev = 0.0;
  double cur = kPiQuarterInv;
  out[0] = cur * factor;
  for (std::size_t n = 0; n + 1 < out.size(); ++n) {
    const double dn = static_cast<double>(n);
    const double next = x * std::sqrt(2.0 / (dn + 1.0)) * cur - std::sqrt(dn / (dn + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e200) {
      constexpr double kShrink = 1e-200;
      cur *= kShrink;
      prev *= kShrink;
      log_scale += 200.0 * std::numbers::ln10;
      factor = std::exp(log_scale);
    }
    out[n + 1] = cur * factor;
  }
}

double osc_eigenfunction(int n, double x) {
  if (n < 0) throw DomainError("osc_eigenfunction: negative order");
  std::vector<double> buf(static_cast<std::size_t>(n) + 1);
  osc_eigenfunctions(x, buf);
  return buf.back();
}

double kummer_phi(double a, double b, double z, const KummerOptions& opts) {
  if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(z))) {
    throw UnsupportedParameters("kummer_phi: non-finite argument");
  }
  if (!(a > 0.0 && a <= 3.0 && b > 0.0 && b <= 3.0) || z > 0.0) {
    throw UnsupportedParameters("kummer_phi: only 0 < a, b <= 3 and z <= 0 are supported");
  }
  if (z == 0.0) return 1.0;
  const double y = -z;
  const double c = b - a;
  // Terminating case: Phi = e^z * polynomial; the algebraic expansion vanishes.
  if (is_nonpositive_integer(c)) return transformed_series(c, b, y, opts.tolerance);

  if (y > opts.asymptotic_threshold) {
    const double v = asymptotic_branch(a, b, y, opts.tolerance);
    if (std::isfinite(v)) return v;
    if (y > 700.0) throw ConvergenceError("kummer_phi: asymptotic expansion did not converge", 1.0);
  }
  if (y > 700.0) {
    throw ConvergenceError("kummer_phi: argument beyond series range and asymptotic branch disabled", 1.0);
  }
  return transformed_series(c, b, y, opts.tolerance);
}

double bessel_i0_scaled(double t) {
  if (!(t >= 0.0)) throw DomainError("bessel_i0: negative or NaN argument");
  if (t <= 30.0) {
    const double q = 0.25 * t * t;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 200; ++m) {
      term *= q / (static_cast<double>(m) * m);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return sum * std::exp(-t);
  }
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double odd = 2.0 * k + 1.0;
    term *= odd * odd / ((k + 1.0) * 8.0 * t);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * t);
}

double bessel_i0(double t) {
  const double scaled = bessel_i0_scaled(t);
  if (t > 709.0) {
    const double v = std::exp(t - 1.0) * scaled;
    if (!std::isfinite(v) || !std::isfinite(v * std::numbers::e)) {
      throw RangeError("bessel_i0: I0(" + std::to_string(t) + ") overflows");
    }
    return v * std::numbers::e;
  }
  return std::exp(t) * scaled;
}

OscillatorBasisCache::OscillatorBasisCache(int max_index, std::vector<double> grid)
    : max_index_(max_index), grid_(std::move(grid)) {
  if (max_index_ < 0) throw DomainError("OscillatorBasisCache: negative max_index");
  const std::size_t rows = static_cast<std::size_t>(max_index_) + 1;
  values_.assign(rows * grid_.size(), 0.0);
  std::vector<double> col(rows);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    osc_eigenfunctions(grid_[i], col);
    for (std::size_t n = 0; n < rows; ++n) values_[n * grid_.size() + i] = col[n];
  }
}

OscillatorBasisCache OscillatorBasisCache::symmetric(int max_index, double half_width, double step) {
  const auto half = static_cast<long>(std::ceil(half_width / step - 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long i = -half; i <= half; ++i) grid.push_back(static_cast<double>(i) * step);
  return OscillatorBasisCache(max_index, std::move(grid));
}

std::span<const double> OscillatorBasisCache::row(int n) const {
  if (n < 0 || n > max_index_) throw DomainError("OscillatorBasisCache: row out of range");
  return {values_.data() + static_cast<std::size_t>(n) * grid_.size(), grid_.size()};
}

}  // namespace nphase::specfun
