// Hermite-series representative of the exponential-phase kernels.

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>

#include "nphase/kernels.hpp"
#include "nphase/specfun.hpp"

namespace nphase::kernels {

namespace {

using Big = boost::multiprecision::cpp_bin_float_100;

double log_factorial(int n) { return boost::math::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace

SeriesCoefficients::SeriesCoefficients(int k, int l_max) : k_(k), l_max_(l_max) {
  if (k < 1) throw std::invalid_argument("SeriesCoefficients: k must be >= 1");
  if (l_max < 0 || l_max > 400) throw std::invalid_argument("SeriesCoefficients: l_max out of range [0, 400]");

  // f(n) = ((n+1)(n+2)...(n+k))^{-1/2}; Delta_l = sum_n binom(l,n) (-1)^{l-n} f(n)
  // is the l-th forward difference at 0. The sum cancels by ~2^l, hence Big.
  const auto count = static_cast<std::size_t>(l_max) + 1;
  std::vector<Big> diff(count);
  for (std::size_t n = 0; n < count; ++n) {
    Big p = 1;
    for (int j = 1; j <= k; ++j) p *= Big(static_cast<int>(n) + j);
    diff[n] = 1 / boost::multiprecision::sqrt(p);
  }
  std::vector<Big> delta(count);
  delta[0] = diff[0];
  for (std::size_t l = 1; l < count; ++l) {
    for (std::size_t n = 0; n + l < count; ++n) diff[n] = diff[n + 1] - diff[n];
    delta[l] = diff[0];
  }

  log_abs_c_.resize(count);
  sign_.resize(count);
  log_weight_.resize(count);
  const double log_sqrt_pi = 0.5 * std::log(std::numbers::pi);
  for (std::size_t l = 0; l < count; ++l) {
    const int li = static_cast<int>(l);
    const int n = 2 * li + k;
    const double log_delta = static_cast<double>(boost::multiprecision::log(boost::multiprecision::abs(delta[l])));
    sign_[l] = delta[l] < 0 ? -1 : 1;
    log_abs_c_[l] = log_factorial(li + k) - (li + 0.5 * k) * std::numbers::ln2 - log_factorial(n) + log_delta;
    // H_n(x) = psi_n(x) e^{x^2/2} sqrt(2^n n! sqrt(pi))
    log_weight_[l] = log_abs_c_[l] + 0.5 * (n * std::numbers::ln2 + log_factorial(n) + log_sqrt_pi);
  }
}

double SeriesCoefficients::coefficient(int l) const {
  return coefficient_sign(l) * std::exp(log_abs_coefficient(l));
}

SeriesCoefficients::Value SeriesCoefficients::evaluate(double x, std::optional<int> terms, double tol) const {
  const int lt = terms.value_or(l_max_);
  if (lt < 0 || lt > l_max_) throw std::invalid_argument("SeriesCoefficients::evaluate: too many terms");
  std::vector<double> psi(static_cast<std::size_t>(2 * lt + k_) + 1);
  specfun::osc_eigenfunctions(x, psi);
  const double half_x2 = 0.5 * x * x;
  double sum = 0.0;
  double last = 0.0;
  double before_last = 0.0;
  for (int l = 0; l <= lt; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const double term = sign_[li] * std::exp(log_weight_[li] + half_x2) * psi[static_cast<std::size_t>(2 * l + k_)];
    sum += term;
    before_last = last;
    last = std::abs(term);
  }
  constexpr double inv_two_pi = 0.5 / std::numbers::pi;
  // psi_n can sit near a node, so the indicator uses the last two terms.
  const double indicator = std::max(last, before_last) * inv_two_pi;
  const double value = sum * inv_two_pi;
  return {value, indicator, indicator <= tol * std::max(1.0, std::abs(value))};
}

SeriesCoefficients::Value kernel_exp_phase_series(int k, double x, int l_max, double tol) {
  if (std::abs(x) > 2.0) throw UnsupportedParameters("kernel_exp_phase_series: validated for |x| <= 2 only");
  if (l_max < 1 || l_max > 80) throw UnsupportedParameters("kernel_exp_phase_series: l_max must be in [1, 80]");
  return SeriesCoefficients(k, l_max).evaluate(x, std::nullopt, tol);
}

}  // namespace nphase::kernels
