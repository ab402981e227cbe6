#include "nphase/kernels.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nphase/specfun.hpp"

namespace nphase::kernels {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvTwoPi = 0.5 / std::numbers::pi;
// Failure threshold on the quadrature error estimate.
constexpr double kQuadratureFailure = 1e-8;

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("kernel spec: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

// Adaptive Gauss-Kronrod over consecutive breakpoints.
template <class F>
double integrate_pieces(F&& f, std::vector<double> pts, const QuadratureOptions& q, const char* name) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], q.max_depth,
                                                                          q.rel_tol, &err);
    total_err += err;
  }
  if (total_err > std::max({kQuadratureFailure, q.abs_tol, q.rel_tol * std::abs(total)})) {
    throw ConvergenceError(std::string(name) + ": quadrature did not converge", total_err);
  }
  return total;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

}  // namespace

// ---- spec ---------------------------------------------------------------------

std::string_view to_string(Target t) {
  switch (t) {
    case Target::vacuum_prob: return "vacuum_prob";
    case Target::photon_number: return "photon_number";
    case Target::photon_number_sq: return "photon_number_sq";
    case Target::moment: return "moment";
    case Target::exp_phase: return "exp_phase";
    case Target::exp_phase_classical: return "exp_phase_classical";
    case Target::trig_sq: return "trig_sq";
  }
  return "?";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::integral: return "integral";
    case Strategy::series: return "series";
    case Strategy::classical: return "classical";
    case Strategy::hybrid: return "hybrid";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::integral, Strategy::series, Strategy::classical, Strategy::hybrid}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown kernel strategy '" + std::string(s) + "'");
}

KernelSpec KernelSpec::vacuum_prob() {
  KernelSpec s;
  s.target = Target::vacuum_prob;
  return s;
}

KernelSpec KernelSpec::photon_number() {
  KernelSpec s;
  s.target = Target::photon_number;
  return s;
}

KernelSpec KernelSpec::photon_number_sq() {
  KernelSpec s;
  s.target = Target::photon_number_sq;
  return s;
}

KernelSpec KernelSpec::moment(int n, int m) {
  KernelSpec s;
  s.target = Target::moment;
  s.n = n;
  s.m = m;
  return s;
}

KernelSpec KernelSpec::exp_phase(int k, Strategy st, double x_switch) {
  KernelSpec s;
  s.target = Target::exp_phase;
  s.order = k;
  s.strategy = st;
  s.x_switch = x_switch;
  return s;
}

KernelSpec KernelSpec::exp_phase_classical(int k) {
  KernelSpec s;
  s.target = Target::exp_phase_classical;
  s.order = k;
  s.strategy = Strategy::classical;
  return s;
}

KernelSpec KernelSpec::trig_sq(int sign, Strategy st, double x_switch) {
  KernelSpec s;
  s.target = Target::trig_sq;
  s.sign = sign;
  s.strategy = st;
  s.x_switch = x_switch;
  return s;
}

KernelSpec KernelSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  auto no_arg = [&](KernelSpec s) {
    if (!arg.empty()) throw std::invalid_argument("kernel spec '" + std::string(text) + "' takes no argument");
    return s;
  };
  KernelSpec s;
  if (name == "vacuum_prob") {
    s = no_arg(vacuum_prob());
  } else if (name == "photon_number") {
    s = no_arg(photon_number());
  } else if (name == "photon_number_sq") {
    s = no_arg(photon_number_sq());
  } else if (name == "moment") {
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument("kernel spec: moment needs 'moment:n,m'");
    s = moment(parse_int(arg.substr(0, comma), "n"), parse_int(arg.substr(comma + 1), "m"));
  } else if (name == "exp_phase") {
    s = exp_phase(parse_int(arg, "order"));
  } else if (name == "exp_phase_classical") {
    s = exp_phase_classical(parse_int(arg, "order"));
  } else if (name == "trig_sq") {
    if (arg == "+") {
      s = trig_sq(+1);
    } else if (arg == "-") {
      s = trig_sq(-1);
    } else {
      throw std::invalid_argument("kernel spec: trig_sq needs '+' or '-'");
    }
  } else {
    throw std::invalid_argument("unknown kernel target '" + std::string(name) + "'");
  }
  s.validate();
  return s;
}

std::string KernelSpec::to_string() const {
  std::string out(kernels::to_string(target));
  switch (target) {
    case Target::moment: return out + ":" + std::to_string(n) + "," + std::to_string(m);
    case Target::exp_phase:
    case Target::exp_phase_classical: return out + ":" + std::to_string(order);
    case Target::trig_sq: return out + (sign > 0 ? ":+" : ":-");
    default: return out;
  }
}

void KernelSpec::validate() const {
  if (!(x_switch >= 3.0)) throw std::invalid_argument("kernel spec: x_switch must be >= 3");
  switch (target) {
    case Target::moment:
      if (n < 0 || m < 0) throw std::invalid_argument("kernel spec: moment orders must be >= 0");
      break;
    case Target::exp_phase:
      if (order < 1) throw std::invalid_argument("kernel spec: exp_phase requires k >= 1");
      if (strategy == Strategy::integral && order > 2) {
        throw std::invalid_argument("kernel spec: integral representation exists for k = 1, 2 only");
      }
      break;
    case Target::exp_phase_classical:
      if (order < 1) throw std::invalid_argument("kernel spec: exp_phase_classical requires k >= 1");
      break;
    case Target::trig_sq:
      if (sign != 1 && sign != -1) throw std::invalid_argument("kernel spec: trig_sq sign must be +1 or -1");
      break;
    default: break;
  }
}

bool KernelSpec::phase_dependent() const {
  switch (target) {
    case Target::moment: return n != m;
    case Target::exp_phase:
    case Target::exp_phase_classical:
    case Target::trig_sq: return true;
    default: return false;
  }
}

bool KernelSpec::series_validated_only() const {
  return target == Target::exp_phase && order >= 3 && strategy != Strategy::classical;
}

// ---- closed forms ---------------------------------------------------------------

double kernel_vacuum_prob(double x) { return specfun::kummer_phi(1.0, 0.5, -x * x) / kPi; }

double kernel_photon_number(double x) { return kInvTwoPi * (x * x - 0.5); }

double kernel_photon_number_sq(double x) {
  const double x2 = x * x;
  return kInvTwoPi * ((2.0 / 3.0) * x2 * x2 - x2);
}

double kernel_moment_radial(int n, int m, double x) {
  if (n < 0 || m < 0) throw DomainError("kernel_moment: negative order");
  const int s = n + m;
  return specfun::hermite(s, x) / (2.0 * kPi * std::sqrt(std::ldexp(1.0, s)) * binomial(s, m));
}

std::complex<double> kernel_moment(int n, int m, double x, double theta) {
  return std::polar(1.0, (m - n) * theta) * kernel_moment_radial(n, m, x);
}

double kernel_exp_phase_classical(int k, double x) {
  if (k < 1) throw DomainError("kernel_exp_phase_classical: k must be >= 1");
  const int half = k / 2;
  if (k % 2 == 1) {
    const double sgn = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    return 0.25 * (half % 2 ? -1.0 : 1.0) * k * sgn;
  }
  if (x == 0.0) {
    // (-1)^{m+1} m log|x| -> (-1)^m inf
    const double sign = half % 2 ? -1.0 : 1.0;
    throw DomainError(std::string("kernel_exp_phase_classical: even k at x = 0 is ") +
                      (sign > 0 ? "+inf" : "-inf"));
  }
  return ((half + 1) % 2 ? -1.0 : 1.0) * half * std::log(std::abs(x)) / kPi;
}

// ---- integral representations -----------------------------------------------------

double kernel_k1_integral(double x, const QuadratureOptions& q) {
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  const double x2 = ax * ax;
  // t = s^2 removes the 1/sqrt(t) endpoint singularity: dt / sqrt(t) = 2 ds.
  auto f = [x2](double s) {
    const double t = s * s;
    const double sech = 1.0 / std::cosh(t);
    return sech * sech * specfun::kummer_phi(2.0, 1.5, -x2 * std::tanh(t));
  };
  std::vector<double> pts{0.0, 1.0, 2.0, 6.0};
  if (ax > 1.0) {
    pts.push_back(0.5 / ax);
    pts.push_back(2.0 / ax);
  }
  const double integral = integrate_pieces(f, pts, q, "kernel_k1_integral");
  const double value = 2.0 * std::pow(kPi, -1.5) * ax * integral;
  return x < 0 ? -value : value;
}

double kernel_k2_regularized(double x, const QuadratureOptions& q) {
  const double x2 = x * x;
  auto f = [x2](double t) {
    const double e2 = std::exp(-2.0 * t);
    // e^t / (cosh^2 t sinh t), written to stay finite for large t
    const double w = 8.0 * e2 / ((1.0 + e2) * (1.0 + e2) * -std::expm1(-2.0 * t));
    const double g = specfun::bessel_i0_scaled(t) * w;
    const double phi = specfun::kummer_phi(2.0, 0.5, -x2 * std::tanh(t));
    return -g * phi + std::exp(-t) / t;
  };
  std::vector<double> pts{0.0, 1.0, 5.0, 40.0};
  if (x2 > 1.0) {
    pts.push_back(0.3 / x2);
    pts.push_back(3.0 / x2);
  }
  return kInvTwoPi * integrate_pieces(f, pts, q, "kernel_k2_regularized");
}

double k2_calibration_offset() {
  static const double offset = std::log(10.0) / kPi - kernel_k2_regularized(10.0);
  return offset;
}

double kernel_k2_integral(double x, const QuadratureOptions& q) {
  return kernel_k2_regularized(x, q) + k2_calibration_offset();
}

// ---- exponential-phase kernel object ------------------------------------------------

namespace {
constexpr int kSeriesTerms = 200;
}

ExpPhaseKernel::ExpPhaseKernel(int k, Strategy strategy, double x_switch, const QuadratureOptions& q)
    : k_(k), strategy_(strategy), x_switch_(x_switch), quad_(q) {
  KernelSpec::exp_phase(k, strategy, x_switch).validate();
  if (strategy == Strategy::classical) return;
  const bool use_series = strategy == Strategy::series || (strategy == Strategy::hybrid && k >= 3);
  if (!use_series) {
    if (k == 2) calibration_ = k2_calibration_offset();
    return;
  }
  series_ = std::make_shared<const SeriesCoefficients>(k, kSeriesTerms);
  if (strategy != Strategy::hybrid) return;

  // Beyond x_switch the series representative behaves as the classical kernel
  // plus a polynomial of degree < k with the parity of k (a null-space term of
  // the closure condition). Fit that polynomial on [x_switch - 2, x_switch].
  std::vector<int> degrees;
  for (int j = k % 2; j < k; j += 2) degrees.push_back(j);
  const int rows = 17;
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(degrees.size()));
  Eigen::VectorXd b(rows);
  for (int r = 0; r < rows; ++r) {
    const double x = x_switch - 2.0 + 2.0 * r / (rows - 1);
    for (std::size_t c = 0; c < degrees.size(); ++c) a(r, static_cast<Eigen::Index>(c)) = std::pow(x, degrees[c]);
    b(r) = exact(x) - kernel_exp_phase_classical(k, x);
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  tail_poly_.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t c = 0; c < degrees.size(); ++c) {
    tail_poly_[static_cast<std::size_t>(degrees[c])] = coef(static_cast<Eigen::Index>(c));
  }
}

double ExpPhaseKernel::exact(double x) const {
  if (series_) {
    const auto v = series_->evaluate(x);
    if (!v.converged) {
      throw ConvergenceError("exp_phase series did not converge at x = " + std::to_string(x), v.last_term);
    }
    return v.value;
  }
  if (k_ == 1) return kernel_k1_integral(x, quad_);
  return kernel_k2_regularized(x, quad_) + calibration_;
}

double ExpPhaseKernel::series_tail(double x) const {
  double poly = 0.0;
  for (std::size_t j = tail_poly_.size(); j-- > 0;) poly = poly * x + tail_poly_[j];
  return kernel_exp_phase_classical(k_, x) + poly;
}

double ExpPhaseKernel::operator()(double x) const {
  switch (strategy_) {
    case Strategy::classical: return kernel_exp_phase_classical(k_, x);
    case Strategy::integral:
    case Strategy::series: return exact(x);
    case Strategy::hybrid:
      if (std::abs(x) <= x_switch_) return exact(x);
      return k_ <= 2 ? kernel_exp_phase_classical(k_, x) : series_tail(x);
  }
  return 0.0;
}

double kernel_exp_phase(int k, double x, Strategy strategy, double x_switch) {
  return ExpPhaseKernel(k, strategy, x_switch)(x);
}

double kernel_trig_sq(int sign, double x, double theta, double x_switch) {
  if (sign != 1 && sign != -1) throw DomainError("kernel_trig_sq: sign must be +1 or -1");
  const double base = (1.0 - specfun::kummer_phi(1.0, 0.5, -x * x)) / (4.0 * kPi);
  return base + sign * 0.5 * std::cos(2.0 * theta) * kernel_exp_phase(2, x, Strategy::hybrid, x_switch);
}

// ---- dispatch -------------------------------------------------------------------

std::complex<double> evaluate(const KernelSpec& spec, double x, double theta) {
  spec.validate();
  switch (spec.target) {
    case Target::vacuum_prob: return kernel_vacuum_prob(x);
    case Target::photon_number: return kernel_photon_number(x);
    case Target::photon_number_sq: return kernel_photon_number_sq(x);
    case Target::moment: return kernel_moment(spec.n, spec.m, x, theta);
    case Target::exp_phase:
      return std::polar(1.0, spec.order * theta) * ExpPhaseKernel(spec.order, spec.strategy, spec.x_switch)(x);
    case Target::exp_phase_classical:
      return std::polar(1.0, spec.order * theta) * kernel_exp_phase_classical(spec.order, x);
    case Target::trig_sq: {
      const double base = (1.0 - specfun::kummer_phi(1.0, 0.5, -x * x)) / (4.0 * kPi);
      return base + spec.sign * 0.5 * std::cos(2.0 * theta) * ExpPhaseKernel(2, spec.strategy, spec.x_switch)(x);
    }
  }
  return 0.0;
}

double classical_limit(const KernelSpec& spec, double x, double theta) {
  switch (spec.target) {
    case Target::vacuum_prob: return 0.0;
    case Target::photon_number: return kInvTwoPi * x * x;
    case Target::photon_number_sq: return kInvTwoPi * (2.0 / 3.0) * x * x * x * x;
    case Target::moment: {
      const int s = spec.n + spec.m;
      return std::pow(2.0 * x, s) / (2.0 * kPi * std::sqrt(std::ldexp(1.0, s)) * binomial(s, spec.m));
    }
    case Target::exp_phase:
    case Target::exp_phase_classical: return kernel_exp_phase_classical(spec.order, x);
    case Target::trig_sq:
      return 1.0 / (4.0 * kPi) + spec.sign * 0.5 * std::cos(2.0 * theta) * kernel_exp_phase_classical(2, x);
  }
  return 0.0;
}

// ---- tables ---------------------------------------------------------------------

KernelTable KernelTable::build(const KernelSpec& spec, double step) {
  spec.validate();
  if (spec.target == Target::trig_sq) {
    throw std::invalid_argument("KernelTable: trig_sq is not a radial kernel; use SamplingKernel");
  }
  if (!(step > 0.0)) throw std::invalid_argument("KernelTable: step must be positive");
  KernelTable t;
  t.spec_ = spec;
  int parity = 1;
  switch (spec.target) {
    case Target::photon_number:
    case Target::photon_number_sq:
    case Target::moment:
    case Target::exp_phase_classical: return t;
    case Target::exp_phase:
      if (spec.strategy == Strategy::classical) return t;
      t.exp_phase_ = std::make_shared<const ExpPhaseKernel>(spec.order, spec.strategy, spec.x_switch);
      t.calibration_ = t.exp_phase_->calibration_offset();
      parity = spec.order % 2 ? -1 : 1;
      break;
    case Target::vacuum_prob: break;
    case Target::trig_sq: break;
  }
  const auto half = static_cast<long>(std::floor(spec.x_switch / step + 1e-9));
  t.step_ = step;
  t.half_width_ = static_cast<double>(half) * step;
  const auto count = static_cast<std::size_t>(2 * half + 1);
  t.grid_.resize(count);
  t.values_.resize(count);
  for (long i = 0; i <= half; ++i) {
    const double x = static_cast<double>(i) * step;
    const double v = t.direct(x);
    const auto up = static_cast<std::size_t>(half + i);
    const auto down = static_cast<std::size_t>(half - i);
    t.grid_[up] = x;
    t.grid_[down] = -x;
    t.values_[up] = v;
    t.values_[down] = parity * v;
  }
  return t;
}

double KernelTable::direct(double x) const {
  switch (spec_.target) {
    case Target::vacuum_prob: return kernel_vacuum_prob(x);
    case Target::photon_number: return kernel_photon_number(x);
    case Target::photon_number_sq: return kernel_photon_number_sq(x);
    case Target::moment: return kernel_moment_radial(spec_.n, spec_.m, x);
    case Target::exp_phase:
      if (exp_phase_) return (*exp_phase_)(x);
      return kernel_exp_phase_classical(spec_.order, x);
    case Target::exp_phase_classical: return kernel_exp_phase_classical(spec_.order, x);
    case Target::trig_sq: break;
  }
  throw std::logic_error("KernelTable: unreachable target");
}

double KernelTable::operator()(double x) const {
  if (grid_.empty() || !(std::abs(x) <= half_width_)) return direct(x);
  const auto last = static_cast<long>(grid_.size()) - 1;
  const double u = (x + half_width_) / step_;
  long j = static_cast<long>(std::floor(u));
  j = std::clamp(j, 1L, last - 2);
  const double t = u - static_cast<double>(j);
  const auto i = static_cast<std::size_t>(j);
  // four-point Lagrange on nodes j-1, j, j+1, j+2
  const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return wm * values_[i - 1] + w0 * values_[i] + w1 * values_[i + 1] + w2 * values_[i + 2];
}

SamplingKernel::SamplingKernel(const KernelSpec& spec, double table_step) : spec_(spec) {
  spec.validate();
  auto table = [&](const KernelSpec& s) { return std::make_shared<const KernelTable>(KernelTable::build(s, table_step)); };
  switch (spec.target) {
    case Target::vacuum_prob:
    case Target::photon_number:
    case Target::photon_number_sq: terms_.push_back({1.0, 0, table(spec)}); break;
    case Target::moment: terms_.push_back({1.0, spec.m - spec.n, table(spec)}); break;
    case Target::exp_phase:
    case Target::exp_phase_classical: terms_.push_back({1.0, spec.order, table(spec)}); break;
    case Target::trig_sq: {
      // 1/(4 pi) = (1/2) K_{0,0};  -(1/4pi) Phi(1,1/2,-x^2) = -(1/4) K_00;
      // +-(1/2) cos(2 theta) K_2 = +-(1/4)(e^{2i theta} + e^{-2i theta}) K_2
      KernelSpec vac = KernelSpec::vacuum_prob();
      vac.x_switch = spec.x_switch;
      auto k2 = table(KernelSpec::exp_phase(2, spec.strategy, spec.x_switch));
      terms_.push_back({0.5, 0, table(KernelSpec::moment(0, 0))});
      terms_.push_back({-0.25, 0, table(vac)});
      terms_.push_back({0.25 * spec.sign, 2, k2});
      terms_.push_back({0.25 * spec.sign, -2, k2});
      break;
    }
  }
}

std::complex<double> SamplingKernel::operator()(double x, double theta) const {
  std::complex<double> sum = 0.0;
  for (const auto& t : terms_) {
    const double r = (*t.radial)(x);
    sum += t.harmonic == 0 ? t.coeff * r : t.coeff * r * std::polar(1.0, t.harmonic * theta);
  }
  return sum;
}

}  // namespace nphase::kernels
