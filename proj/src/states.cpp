#include "nphase/states.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "nphase/specfun.hpp"

namespace nphase::states {

namespace {

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end || !std::isfinite(v))
    throw std::invalid_argument("bad " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end)
    throw std::invalid_argument("bad " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

// "a", "bi", "a+bi", "a-bi"; a leading '+' is not accepted by from_chars.
cplx parse_complex(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty() || s.back() != 'i') return {parse_double(s, "complex amplitude"), 0.0};
  s.remove_suffix(1);
  std::size_t split = std::string_view::npos;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') split = i;
  }
  if (split == std::string_view::npos) {
    if (s.empty() || s == "-") return {0.0, s.empty() ? 1.0 : -1.0};
    return {0.0, parse_double(s, "complex amplitude")};
  }
  const double re = parse_double(s.substr(0, split), "complex amplitude");
  auto im_text = s.substr(split);
  double im;
  if (im_text == "+") im = 1.0;
  else if (im_text == "-") im = -1.0;
  else im = parse_double(im_text.front() == '+' ? im_text.substr(1) : im_text, "complex amplitude");
  return {re, im};
}

// shortest round-trip form
std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Pure state from its amplitudes, truncated to the first `count`.
Eigen::MatrixXcd outer(const std::vector<cplx>& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = c[static_cast<std::size_t>(i)];
  return v * v.adjoint();
}

// Appends amplitudes/probabilities until the trace target (or the explicit
// size) is met. next(n) returns the n-th entry; weight gives its probability.
template <class Next, class Weight>
std::vector<cplx> grow(Next next, Weight weight, std::optional<int> n_max, int cap, const std::string& label) {
  std::vector<cplx> out;
  double acc = 0.0;
  const int limit = n_max ? *n_max : cap;
  for (int n = 0; n <= limit; ++n) {
    out.push_back(next(n));
    acc += weight(out.back());
    if (!n_max && acc >= kTraceTarget) return out;
  }
  if (acc < kTraceTarget) {
    throw TruncationError(label + ": truncation at n_max = " + std::to_string(limit) + " holds trace " +
                          format_double(acc) + " < 1 - 1e-10");
  }
  return out;
}

}  // namespace

StateSpec StateSpec::fock(int n) {
  if (n < 0) throw std::invalid_argument("fock: n must be >= 0");
  StateSpec s;
  s.kind = Kind::fock;
  s.n = n;
  return s;
}

StateSpec StateSpec::coherent(cplx alpha) {
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) throw std::invalid_argument("coherent: alpha must be finite");
  StateSpec s;
  s.kind = Kind::coherent;
  s.alpha = alpha;
  return s;
}

StateSpec StateSpec::thermal(double nbar) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw std::invalid_argument("thermal: nbar must be >= 0");
  StateSpec s;
  s.kind = Kind::thermal;
  s.nbar = nbar;
  return s;
}

StateSpec StateSpec::squeezed_vacuum(double r) {
  if (!std::isfinite(r)) throw std::invalid_argument("squeezed: r must be finite");
  StateSpec s;
  s.kind = Kind::squeezed_vacuum;
  s.r = r;
  return s;
}

StateSpec StateSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("state spec needs 'kind:param': '" + std::string(text) + "'");
  const auto kind = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  if (kind == "fock") return fock(parse_int(arg, "fock index"));
  if (kind == "coherent") return coherent(parse_complex(arg));
  if (kind == "thermal") return thermal(parse_double(arg, "thermal nbar"));
  if (kind == "squeezed" || kind == "squeezed_vacuum") return squeezed_vacuum(parse_double(arg, "squeezing r"));
  throw std::invalid_argument("unknown state kind '" + std::string(kind) + "'");
}

std::string StateSpec::to_string() const {
  switch (kind) {
    case Kind::fock:
      return "fock:" + std::to_string(n);
    case Kind::coherent: {
      std::string s = "coherent:" + format_double(alpha.real());
      if (alpha.imag() != 0.0) s += (alpha.imag() < 0 ? "" : "+") + format_double(alpha.imag()) + "i";
      return s;
    }
    case Kind::thermal:
      return "thermal:" + format_double(nbar);
    case Kind::squeezed_vacuum:
      return "squeezed:" + format_double(r);
  }
  return {};
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd m) : rho_(std::move(m)) {
  if (rho_.rows() != rho_.cols() || rho_.rows() == 0) throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-12) throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
  rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
  for (Eigen::Index i = 0; i < rho_.rows(); ++i) {
    if (rho_(i, i).real() < 0.0) throw std::invalid_argument("DensityMatrix: negative diagonal element");
    rho_(i, i).imag(0.0);
  }
  const double tr = trace();
  if (tr < kTraceTarget || tr > 1.0 + 1e-10) throw std::invalid_argument("DensityMatrix: trace " + format_double(tr) + " outside [1 - 1e-10, 1]");
}

DensityMatrix DensityMatrix::rotated(double phi0) const {
  Eigen::MatrixXcd out = rho_;
  for (Eigen::Index n = 0; n < out.rows(); ++n)
    for (Eigen::Index np = 0; np < out.cols(); ++np)
      if (n != np) out(n, np) *= std::polar(1.0, phi0 * static_cast<double>(n - np));
  return DensityMatrix(std::move(out));
}

DensityMatrix make_state(const StateSpec& spec, std::optional<int> n_max, int cap) {
  if (cap < 0) throw std::invalid_argument("make_state: cap must be >= 0");
  if (n_max && *n_max < 0) throw std::invalid_argument("make_state: n_max must be >= 0");
  const std::string label = spec.to_string();
  auto prob = [](cplx c) { return std::norm(c); };

  switch (spec.kind) {
    case StateSpec::Kind::fock: {
      const int dim_max = n_max ? *n_max : spec.n;
      if (spec.n > dim_max || spec.n > (n_max ? *n_max : cap))
        throw TruncationError(label + ": Fock index exceeds the truncation");
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_max + 1, dim_max + 1);
      m(spec.n, spec.n) = 1.0;
      return DensityMatrix(std::move(m));
    }
    case StateSpec::Kind::coherent: {
      // log-space amplitudes avoid underflow of e^{-|alpha|^2/2} for large |alpha|
      const double mod = std::abs(spec.alpha), ph = std::arg(spec.alpha);
      auto amp = [&](int n) -> cplx {
        if (mod == 0.0) return n == 0 ? 1.0 : 0.0;
        const double lg = -0.5 * mod * mod + n * std::log(mod) - 0.5 * std::lgamma(n + 1.0);
        return std::polar(std::exp(lg), n * ph);
      };
      return DensityMatrix(outer(grow(amp, prob, n_max, cap, label)));
    }
    case StateSpec::Kind::thermal: {
      const double q = spec.nbar / (1.0 + spec.nbar);
      auto p = [&](int n) -> cplx { return (1.0 - q) * std::pow(q, n); };
      const auto diag = grow(p, [](cplx c) { return c.real(); }, n_max, cap, label);
      const auto d = static_cast<Eigen::Index>(diag.size());
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i) m(i, i) = diag[static_cast<std::size_t>(i)];
      return DensityMatrix(std::move(m));
    }
    case StateSpec::Kind::squeezed_vacuum: {
      const double t = std::tanh(spec.r);
      cplx even = std::sqrt(1.0 / std::cosh(spec.r));
      int m_next = 0;
      // c_{2m+2} = c_{2m} (-tanh r) sqrt((2m+1)(2m+2)) / (2(m+1))
      auto amp = [&](int n) -> cplx {
        if (n % 2) return 0.0;
        const int m = n / 2;
        while (m_next < m) {
          even *= -t * std::sqrt((2.0 * m_next + 1) * (2.0 * m_next + 2)) / (2.0 * (m_next + 1));
          ++m_next;
        }
        return even;
      };
      return DensityMatrix(outer(grow(amp, prob, n_max, cap, label)));
    }
  }
  throw std::invalid_argument("make_state: unknown kind");
}

void quadrature_harmonics(const DensityMatrix& rho, double x, std::span<cplx> out) {
  const int dim = rho.dim();
  if (static_cast<int>(out.size()) < dim) throw std::invalid_argument("quadrature_harmonics: output too short");
  std::vector<double> psi(static_cast<std::size_t>(dim));
  specfun::osc_eigenfunctions(x, psi);
  const auto& m = rho.matrix();
  for (int d = 0; d < dim; ++d) {
    cplx s = 0.0;
    for (int n = 0; n + d < dim; ++n) s += psi[static_cast<std::size_t>(n + d)] * psi[static_cast<std::size_t>(n)] * m(n + d, n);
    out[static_cast<std::size_t>(d)] = s;
  }
}

double quadrature_pdf(const DensityMatrix& rho, double x, double theta) {
  std::vector<cplx> a(static_cast<std::size_t>(rho.dim()));
  quadrature_harmonics(rho, x, a);
  double p = a[0].real();
  for (std::size_t d = 1; d < a.size(); ++d) p += 2.0 * (std::polar(1.0, -static_cast<double>(d) * theta) * a[d]).real();
  return p;
}

cplx exp_phase_moment(const DensityMatrix& rho, int k) {
  if (k < 1) throw DomainError("exp_phase_moment: k must be >= 1");
  cplx s = 0.0;
  for (int n = 0; n + k < rho.dim(); ++n) s += rho(n + k, n);
  return s;
}

PhotonMoments photon_moments(const DensityMatrix& rho) {
  double m1 = 0.0, m2 = 0.0;
  for (int n = 0; n < rho.dim(); ++n) {
    const double p = rho(n, n).real();
    m1 += n * p;
    m2 += static_cast<double>(n) * n * p;
  }
  return {m1, m2, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

TrigStatistics trig_statistics(const DensityMatrix& rho) {
  const cplx p1 = exp_phase_moment(rho, 1);
  const cplx p2 = exp_phase_moment(rho, 2);
  TrigStatistics t{};
  t.rho00 = rho(0, 0).real();
  t.mean_c = p1.real();
  t.mean_s = p1.imag();
  t.mean_c2 = 0.5 + 0.5 * p2.real() - 0.25 * t.rho00;
  t.mean_s2 = 0.5 - 0.5 * p2.real() - 0.25 * t.rho00;
  t.delta_c = std::sqrt(std::max(0.0, t.mean_c2 - t.mean_c * t.mean_c));
  t.delta_s = std::sqrt(std::max(0.0, t.mean_s2 - t.mean_s * t.mean_s));
  return t;
}

PhaseStatistics phase_statistics_from(std::vector<cplx> psi) {
  if (psi.empty()) throw DomainError("phase_statistics: need at least Psi_1");
  PhaseStatistics s;
  s.psi = std::move(psi);
  const double mod = std::min(1.0, std::abs(s.psi[0]));
  s.mean_phase = mod > 0.0 ? std::arg(s.psi[0]) : 0.0;
  s.delta_phi = std::acos(mod);
  s.sigma_bp = std::sqrt(1.0 - mod * mod);
  s.sigma_h_infinite = mod == 0.0;
  s.sigma_h = s.sigma_h_infinite ? std::numeric_limits<double>::infinity() : s.sigma_bp / mod;
  return s;
}

PhaseStatistics phase_statistics(const DensityMatrix& rho, int K) {
  if (K < 1) throw DomainError("phase_statistics: K must be >= 1");
  std::vector<cplx> psi;
  for (int k = 1; k <= K; ++k) psi.push_back(exp_phase_moment(rho, k));
  return phase_statistics_from(std::move(psi));
}

}  // namespace nphase::states
