#pragma once

// Test-only reference computations. Nothing here calls into the library's
// own evaluation paths, so agreement is an independent check.

#include <boost/math/special_functions/hypergeometric_1F1.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

inline std::vector<double> symmetric_grid(double half_width, double step) {
  const auto half = static_cast<long>(std::ceil(half_width / step - 1e-9));
  std::vector<double> g;
  for (long i = -half; i <= half; ++i) g.push_back(static_cast<double>(i) * step);
  return g;
}

// Dawson integral D(x) = e^{-x^2} int_0^x e^{t^2} dt by composite Simpson.
inline double dawson(double x, int intervals = 200000) {
  const long double h = static_cast<long double>(x) / intervals;
  long double s = 0.0L;
  const long double xx = static_cast<long double>(x) * x;
  for (int i = 0; i <= intervals; ++i) {
    const long double t = h * i;
    const long double w = (i == 0 || i == intervals) ? 1.0L : (i % 2 ? 4.0L : 2.0L);
    s += w * std::exp(t * t - xx);
  }
  return static_cast<double>(s * h / 3.0L);
}

// 1F1 in 50-digit arithmetic.
inline double kummer(double a, double b, double z) {
  return static_cast<double>(boost::math::hypergeometric_1F1(Big(a), Big(b), Big(z)));
}

// I0(t) from partial sums of sum (t/2)^{2m} / (m!)^2 in extended precision.
inline double bessel_i0_series(double t) {
  const long double q = 0.25L * t * t;
  long double term = 1.0L, sum = 1.0L;
  for (int m = 1; m < 2000; ++m) {
    term *= q / (static_cast<long double>(m) * m);
    sum += term;
    if (term < 1e-22L * sum) break;
  }
  return static_cast<double>(sum);
}

// I1(t) series, used for the von Mises moment ratio I1/I0.
inline double bessel_i1_series(double t) {
  const long double q = 0.25L * t * t;
  long double term = 0.5L * t, sum = term;
  for (int m = 1; m < 2000; ++m) {
    term *= q / (static_cast<long double>(m) * (m + 1));
    sum += term;
    if (term < 1e-22L * sum) break;
  }
  return static_cast<double>(sum);
}

// Normalized oscillator eigenfunctions from explicit Hermite polynomials in
// 50-digit arithmetic (no recurrence on psi).
inline double psi_reference(int n, double x) {
  Big X(x), h0(1), h1(2 * X);
  Big hn = n == 0 ? h0 : h1;
  for (int k = 1; k < n; ++k) {
    Big h2 = 2 * X * h1 - 2 * k * h0;
    h0 = h1;
    h1 = h2;
    hn = h2;
  }
  Big norm = boost::multiprecision::pow(Big(2), n) * boost::math::factorial<Big>(static_cast<unsigned>(n)) *
             boost::multiprecision::sqrt(boost::math::constants::pi<Big>());
  return static_cast<double>(hn * boost::multiprecision::exp(-X * X / 2) / boost::multiprecision::sqrt(norm));
}

}  // namespace oracle
