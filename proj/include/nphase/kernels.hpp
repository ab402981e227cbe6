#pragma once

// Sampling kernels K(x, theta) for the direct homodyne estimator
//   A = \int_0^{2pi} dtheta \int dx K_A(x, theta) p(x, theta).
//
// Every kernel here is separable into terms c * e^{i h theta} * R(x); the
// radial parts R are evaluated either in closed form, by quadrature of their
// integral representation, by the Hermite series, or by their classical
// (large-|x|) limit.

#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nphase/errors.hpp"

namespace nphase::kernels {

enum class Target {
  vacuum_prob,
  photon_number,
  photon_number_sq,
  moment,
  exp_phase,
  exp_phase_classical,
  trig_sq,
};

enum class Strategy { integral, series, classical, hybrid };

std::string_view to_string(Target t);
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct KernelSpec {
  Target target = Target::exp_phase;
  int order = 1;  // k of exp_phase / exp_phase_classical
  int n = 0;      // moment <a^{dag n} a^m>
  int m = 0;
  int sign = +1;  // trig_sq: +1 for <C^2>, -1 for <S^2>
  Strategy strategy = Strategy::hybrid;
  double x_switch = 6.0;

  static KernelSpec vacuum_prob();
  static KernelSpec photon_number();
  static KernelSpec photon_number_sq();
  static KernelSpec moment(int n, int m);
  static KernelSpec exp_phase(int k, Strategy s = Strategy::hybrid, double x_switch = 6.0);
  static KernelSpec exp_phase_classical(int k);
  static KernelSpec trig_sq(int sign, Strategy s = Strategy::hybrid, double x_switch = 6.0);

  /// Parses the target part: "vacuum_prob", "photon_number", "photon_number_sq",
  /// "moment:n,m", "exp_phase:k", "exp_phase_classical:k", "trig_sq:+" / "trig_sq:-".
  static KernelSpec parse(std::string_view text);
  std::string to_string() const;

  /// Throws std::invalid_argument when the spec violates its invariants.
  void validate() const;
  /// True when the kernel depends on theta.
  bool phase_dependent() const;
  /// k >= 3 exponential-phase kernels only have the series representative.
  bool series_validated_only() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// ---- closed forms -----------------------------------------------------------

/// pi^{-1} Phi(1, 1/2, -x^2): samples rho_00.
double kernel_vacuum_prob(double x);
/// (x^2 - 1/2) / (2 pi): samples <n>.
double kernel_photon_number(double x);
/// ((2/3) x^4 - x^2) / (2 pi): samples <n^2>.
double kernel_photon_number_sq(double x);

/// Kernel for the normally ordered moment <a^{dag n} a^m>:
/// e^{i(m-n)theta} H_{n+m}(x) / (2 pi sqrt(2^{n+m}) binom(n+m, m)).
/// The phase factor follows the quadrature convention x(theta) = (a e^{-i theta} + h.c.)/sqrt 2.
std::complex<double> kernel_moment(int n, int m, double x, double theta);
double kernel_moment_radial(int n, int m, double x);

/// Classical-limit kernels: k = 2m+1 -> (1/4)(-1)^m (2m+1) sign(x);
/// k = 2m -> (-1)^{m+1} m log|x| / pi. Even k at x = 0 throws DomainError.
double kernel_exp_phase_classical(int k, double x);

// ---- exponential-phase kernels -------------------------------------------------

struct QuadratureOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-12;
  unsigned max_depth = 18;
};

/// K_1 from its integral representation (exact at every x).
double kernel_k1_integral(double x, const QuadratureOptions& q = {});

/// The regularized K_2 integral before the additive constant is fixed:
/// (1/2 pi) \int_0^inf dt [-I0(t) Phi(2, 1/2, -x^2 tanh t) / (cosh^2 t sinh t) + e^{-t}/t].
double kernel_k2_regularized(double x, const QuadratureOptions& q = {});

/// Additive constant making the K_2 integral equal log(10)/pi at x = 10.
double k2_calibration_offset();

/// Calibrated K_2 from its integral representation.
double kernel_k2_integral(double x, const QuadratureOptions& q = {});

/// Coefficients of the Hermite-series representative
/// K_k(x) = (2 pi)^{-1} sum_l C_l^{(k)} H_{2l+k}(x). The alternating binomial sums
/// are done in 100-digit arithmetic; C_l is stored as sign and log magnitude.
class SeriesCoefficients {
 public:
  SeriesCoefficients(int k, int l_max);

  int order() const noexcept { return k_; }
  int l_max() const noexcept { return l_max_; }
  double log_abs_coefficient(int l) const { return log_abs_c_.at(static_cast<std::size_t>(l)); }
  int coefficient_sign(int l) const { return sign_.at(static_cast<std::size_t>(l)); }
  /// C_l^{(k)} as a double (underflows to 0 for very large l).
  double coefficient(int l) const;

  struct Value {
    double value;
    double last_term;  // magnitude of the last included term, same scaling as value
    bool converged;
  };

  /// Partial sum through l <= terms (defaults to l_max).
  Value evaluate(double x, std::optional<int> terms = std::nullopt, double tol = 1e-10) const;

 private:
  int k_;
  int l_max_;
  std::vector<double> log_abs_c_;
  std::vector<int> sign_;
  std::vector<double> log_weight_;  // log|C_l| + log sqrt(2^n n! sqrt(pi)), n = 2l + k
};

/// Series partial sum in its validation regime (|x| <= 2, l_max <= 80).
/// Non-convergence is flagged in the result, not thrown.
SeriesCoefficients::Value kernel_exp_phase_series(int k, double x, int l_max, double tol = 1e-10);

/// Radial exponential-phase kernel K_k(x) with a fixed evaluation strategy.
/// Construction does the expensive one-off work (calibration, series
/// coefficients, tail fit); evaluation is then pure and thread-safe.
class ExpPhaseKernel {
 public:
  ExpPhaseKernel(int k, Strategy strategy = Strategy::hybrid, double x_switch = 6.0,
                 const QuadratureOptions& q = {});

  double operator()(double x) const;
  double classical(double x) const { return kernel_exp_phase_classical(k_, x); }
  int order() const noexcept { return k_; }
  Strategy strategy() const noexcept { return strategy_; }
  double x_switch() const noexcept { return x_switch_; }
  /// Additive constant included in the integral representation (k = 2 only).
  double calibration_offset() const noexcept { return calibration_; }

 private:
  double exact(double x) const;
  double series_tail(double x) const;

  int k_;
  Strategy strategy_;
  double x_switch_;
  QuadratureOptions quad_;
  double calibration_ = 0.0;
  std::shared_ptr<const SeriesCoefficients> series_;
  std::vector<double> tail_poly_;  // coefficient of x^j for the k >= 3 tail, j < k
};

/// Convenience wrapper: constructs an ExpPhaseKernel for a single evaluation.
double kernel_exp_phase(int k, double x, Strategy strategy = Strategy::hybrid, double x_switch = 6.0);

/// Trigonometric-square kernels (1/4pi)[1 - Phi(1,1/2,-x^2)] +- (1/2) cos(2 theta) K_2(x).
double kernel_trig_sq(int sign, double x, double theta, double x_switch = 6.0);

// ---- generic dispatch -------------------------------------------------------

/// Direct (untabulated) evaluation of K(x, theta).
std::complex<double> evaluate(const KernelSpec& spec, double x, double theta);

/// Large-|x| form of the kernel (leading terms for the polynomial kernels,
/// the classical exponential-phase kernels otherwise).
double classical_limit(const KernelSpec& spec, double x, double theta);

/// Radial kernel on a symmetric uniform grid, interpolated inside and
/// evaluated directly (tail rule of its strategy) outside. Closed-form
/// radial kernels are stored without a grid. Immutable once built.
class KernelTable {
 public:
  /// spec must be a radial target (not trig_sq); the phase factor is not part of the table.
  static KernelTable build(const KernelSpec& spec, double step = 0.01);

  const KernelSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double step() const noexcept { return step_; }
  double half_width() const noexcept { return half_width_; }
  double calibration_offset() const noexcept { return calibration_; }
  bool tabulated() const noexcept { return !grid_.empty(); }

  double operator()(double x) const;

 private:
  KernelTable() = default;
  double direct(double x) const;

  KernelSpec spec_;
  std::vector<double> grid_;
  std::vector<double> values_;
  double step_ = 0.0;
  double half_width_ = 0.0;
  double calibration_ = 0.0;
  std::shared_ptr<const ExpPhaseKernel> exp_phase_;
};

/// K(x, theta) = sum_j coeff_j e^{i h_j theta} R_j(x) assembled from tables.
class SamplingKernel {
 public:
  struct Term {
    std::complex<double> coeff;
    int harmonic;
    std::shared_ptr<const KernelTable> radial;
  };

  explicit SamplingKernel(const KernelSpec& spec, double table_step = 0.01);

  const KernelSpec& spec() const noexcept { return spec_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  std::complex<double> operator()(double x, double theta) const;

 private:
  KernelSpec spec_;
  std::vector<Term> terms_;
};

}  // namespace nphase::kernels
