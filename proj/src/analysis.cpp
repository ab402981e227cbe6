#include "nphase/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace nphase::analysis {

namespace {

using kernels::KernelSpec;
using Vec = Eigen::Matrix<double, URInputs::count, 1>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

Uncertain operator-(Uncertain a, const Uncertain& b) {
  a.value -= b.value;
  a.grad -= b.grad;
  a.extra_var += b.extra_var;
  return a;
}

Uncertain operator*(double c, Uncertain a) {
  a.value *= c;
  a.grad *= c;
  a.extra_var *= c * c;
  return a;
}

Uncertain operator*(const Uncertain& a, const Uncertain& b) {
  Uncertain r;
  r.value = a.value * b.value;
  r.grad = b.value * a.grad + a.value * b.grad;
  r.extra_var = b.value * b.value * a.extra_var + a.value * a.value * b.extra_var;
  return r;
}

Uncertain operator/(const Uncertain& a, const Uncertain& b) {
  Uncertain r;
  r.value = a.value / b.value;
  r.grad = (a.grad * b.value - a.value * b.grad) / (b.value * b.value);
  r.extra_var = a.extra_var / (b.value * b.value) + r.value * r.value * b.extra_var / (b.value * b.value);
  return r;
}

// At 0 the derivative does not exist; sqrt of a N(0, s^2) quantity has scale sqrt(s).
Uncertain sqrt_u(const Uncertain& a, const URInputs& in) {
  Uncertain r;
  if (a.value > 0.0) {
    r.value = std::sqrt(a.value);
    r.grad = a.grad / (2.0 * r.value);
    r.extra_var = a.extra_var / (4.0 * a.value);
  } else {
    r.value = 0.0;
    r.extra_var = a.error(in);
  }
  return r;
}

Uncertain abs_u(Uncertain a, const URInputs& in) {
  if (a.value > 0.0) return a;
  if (a.value < 0.0) return -1.0 * a;
  Uncertain r;
  r.extra_var = std::pow(a.error(in), 2);
  return r;
}

struct Clamped {
  Uncertain value;
  bool clamped = false;
};

// Negative variance: within the error window -> 0 with a flag, beyond -> error.
Clamped clamp_variance(Uncertain v, const URInputs& in, const VerifyOptions& opts, bool tolerant, const char* what) {
  if (v.value >= 0.0) return {v, false};
  const double err = v.error(in);
  const double window = in.source == Source::oracle ? opts.oracle_slack : opts.sigma_threshold * err;
  if (!tolerant && -v.value > window) {
    throw InconsistencyError(std::string("negative variance estimate for ") + what + ": " + std::to_string(v.value) +
                             " beyond " + std::to_string(opts.sigma_threshold) + " sigma (" + std::to_string(err) + ")");
  }
  v.value = 0.0;
  return {v, in.source == Source::sampled};
}

Verdict verdict_for(double margin, double err, Source src, const VerifyOptions& opts) {
  if (!std::isfinite(margin)) return Verdict::indeterminate;
  if (src == Source::oracle) return margin >= -opts.oracle_slack ? Verdict::satisfied : Verdict::violated;
  if (margin >= 0.0) return Verdict::satisfied;
  return -margin <= opts.sigma_threshold * err ? Verdict::violated_within_error : Verdict::violated;
}

Derived derive_impl(const URInputs& in, const VerifyOptions& opts, bool tolerant) {
  using I = URInputs;
  Derived d;
  const auto re = Uncertain::input(in, I::psi1_re), im = Uncertain::input(in, I::psi1_im);

  auto vn = clamp_variance(Uncertain::input(in, I::mean_n2) - Uncertain::input(in, I::mean_n) * Uncertain::input(in, I::mean_n),
                           in, opts, tolerant, "delta_n");
  if (vn.clamped) d.flags.push_back("variance_clamped:delta_n");
  d.delta_n_sq = vn.value;
  d.delta_n = sqrt_u(vn.value, in);

  auto vc = clamp_variance(Uncertain::input(in, I::mean_c2) - re * re, in, opts, tolerant, "delta_c");
  if (vc.clamped) d.flags.push_back("variance_clamped:delta_c");
  d.delta_c = sqrt_u(vc.value, in);
  auto vs = clamp_variance(Uncertain::input(in, I::mean_s2) - im * im, in, opts, tolerant, "delta_s");
  if (vs.clamped) d.flags.push_back("variance_clamped:delta_s");
  d.delta_s = sqrt_u(vs.value, in);

  const double r = std::hypot(re.value, im.value);
  d.sigma_h_infinite = r == 0.0;
  if (d.sigma_h_infinite) {
    d.abs_psi1 = Uncertain::constant(0.0);
    d.abs_psi1.extra_var = re.error(in) * re.error(in) + im.error(in) * im.error(in);
    d.tan_dphi = Uncertain::constant(kInf);
    return d;
  }
  d.abs_psi1.value = r;
  d.abs_psi1.grad = (re.value / r) * re.grad + (im.value / r) * im.grad;
  if (in.source == Source::sampled && r <= opts.sigma_threshold * d.abs_psi1.error(in)) {
    d.psi1_consistent_with_zero = true;
    d.flags.push_back("psi1_consistent_with_zero");
  }
  if (r > 1.0) {
    // noise can push |Psi_1| past 1; arccos needs it inside
    d.abs_psi1.value = 1.0;
    if (in.source == Source::sampled) d.flags.push_back("psi1_clamped");
  }
  const auto one = Uncertain::constant(1.0);
  d.tan_dphi = sqrt_u(one - d.abs_psi1 * d.abs_psi1, in) / d.abs_psi1;
  return d;
}

bool contains(const std::vector<std::string>& v, std::string_view s) { return std::find(v.begin(), v.end(), s) != v.end(); }

std::vector<URReport> verify_impl(const URInputs& in, const VerifyOptions& opts, bool tolerant) {
  using I = URInputs;
  const Derived d = derive_impl(in, opts, tolerant);
  const auto re = Uncertain::input(in, I::psi1_re), im = Uncertain::input(in, I::psi1_im);
  const auto rho00 = Uncertain::input(in, I::rho00);

  auto make = [&](Relation rel, const Uncertain& lhs, const Uncertain& rhs, std::initializer_list<const char*> inherit) {
    URReport r;
    r.relation = rel;
    r.source = in.source;
    r.lhs = lhs.value;
    r.rhs = rhs.value;
    const Uncertain margin = lhs - rhs;
    r.margin = margin.value;
    if (in.source == Source::sampled) {
      r.lhs_err = lhs.error(in);
      r.rhs_err = rhs.error(in);
      r.margin_err = margin.error(in);
    }
    r.verdict = verdict_for(r.margin, r.margin_err, in.source, opts);
    for (const char* f : inherit)
      for (const auto& flag : d.flags)
        if (flag.starts_with(f)) r.flags.push_back(flag);
    return r;
  };

  auto phase_relation = [&](Relation rel, const Uncertain& lhs, double rhs) {
    if (d.sigma_h_infinite) {
      URReport r;
      r.relation = rel;
      r.source = in.source;
      r.lhs = d.delta_n.value == 0.0 ? kNaN : kInf;
      r.rhs = rhs;
      r.margin = r.lhs - rhs;
      r.lhs_err = r.margin_err = in.source == Source::sampled ? kNaN : 0.0;
      r.verdict = Verdict::indeterminate;
      r.flags.push_back("sigma_h_infinite");
      if (d.delta_n.value == 0.0) r.flags.push_back("zero_times_infinity");
      for (const auto& flag : d.flags)
        if (flag == "variance_clamped:delta_n") r.flags.push_back(flag);
      return r;
    }
    URReport r = make(rel, lhs, Uncertain::constant(rhs), {"variance_clamped:delta_n", "psi1_clamped", "psi1_consistent_with_zero"});
    // first-order errors mean nothing when tan(arccos|Psi_1|) may be unbounded
    if (d.psi1_consistent_with_zero) r.verdict = Verdict::indeterminate;
    return r;
  };

  std::vector<URReport> out;
  out.push_back(phase_relation(Relation::tan_ur, d.delta_n * d.tan_dphi, 0.5));
  out.push_back(phase_relation(Relation::holevo, d.delta_n_sq * d.tan_dphi * d.tan_dphi, 0.25));
  out.push_back(make(Relation::nC, d.delta_n * d.delta_c, 0.5 * abs_u(im, in), {"variance_clamped:delta_n", "variance_clamped:delta_c"}));
  out.push_back(make(Relation::nS, d.delta_n * d.delta_s, 0.5 * abs_u(re, in), {"variance_clamped:delta_n", "variance_clamped:delta_s"}));

  const Uncertain cs_lhs = d.delta_s * d.delta_c;
  URReport cs = make(Relation::CS, cs_lhs, 0.25 * rho00, {"variance_clamped:delta_c", "variance_clamped:delta_s"});
  const Uncertain half_rhs = 0.5 * rho00;
  const Uncertain half_margin = cs_lhs - half_rhs;
  cs.half_rhs = half_rhs.value;
  cs.half_margin = half_margin.value;
  cs.half_rhs_err = in.source == Source::sampled ? half_rhs.error(in) : 0.0;
  cs.half_margin_err = in.source == Source::sampled ? half_margin.error(in) : 0.0;
  cs.half_verdict = verdict_for(*cs.half_margin, *cs.half_margin_err, in.source, opts);
  if (*cs.half_verdict != cs.verdict) cs.flags.push_back("half_bound_discrepancy");
  out.push_back(std::move(cs));
  return out;
}

URInputs inputs_from_values(const Vec& v) {
  URInputs in;
  in.source = Source::sampled;
  in.value = v;
  return in;
}

}  // namespace

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::tan_ur: return "tan_ur";
    case Relation::holevo: return "holevo";
    case Relation::nC: return "nC";
    case Relation::nS: return "nS";
    case Relation::CS: return "CS";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    case Verdict::violated_within_error: return "violated_within_error";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

std::string_view to_string(Source s) { return s == Source::oracle ? "oracle" : "sampled"; }

bool URReport::has_flag(std::string_view f) const { return contains(flags, f); }

Uncertain Uncertain::input(const URInputs& in, URInputs::Index i) {
  Uncertain u;
  u.value = in.value(i);
  u.grad(i) = 1.0;
  return u;
}

Uncertain Uncertain::constant(double v) {
  Uncertain u;
  u.value = v;
  return u;
}

double Uncertain::error(const URInputs& in) const {
  return std::sqrt(std::max(0.0, grad.dot(in.covariance * grad) + extra_var));
}

URInputs oracle_inputs(const states::DensityMatrix& rho) {
  using I = URInputs;
  URInputs in;
  in.source = Source::oracle;
  const auto p1 = states::exp_phase_moment(rho, 1), p2 = states::exp_phase_moment(rho, 2);
  const auto pm = states::photon_moments(rho);
  const auto t = states::trig_statistics(rho);
  in.value(I::psi1_re) = p1.real();
  in.value(I::psi1_im) = p1.imag();
  in.value(I::psi2_re) = p2.real();
  in.value(I::psi2_im) = p2.imag();
  in.value(I::rho00) = t.rho00;
  in.value(I::mean_n) = pm.mean_n;
  in.value(I::mean_n2) = pm.mean_n2;
  in.value(I::mean_c2) = t.mean_c2;
  in.value(I::mean_s2) = t.mean_s2;
  return in;
}

URInputs sampled_inputs(const homodyne::EstimateSet& est) {
  using I = URInputs;
  // (estimate, component) for each input slot
  const std::pair<KernelSpec, int> map[I::count] = {
      {KernelSpec::exp_phase(1), 0},      {KernelSpec::exp_phase(1), 1},  {KernelSpec::exp_phase(2), 0},
      {KernelSpec::exp_phase(2), 1},      {KernelSpec::vacuum_prob(), 0}, {KernelSpec::photon_number(), 0},
      {KernelSpec::photon_number_sq(), 0}, {KernelSpec::trig_sq(+1), 0},  {KernelSpec::trig_sq(-1), 0}};
  URInputs in;
  in.source = Source::sampled;
  std::array<Eigen::Index, I::count> col{};
  for (int i = 0; i < I::count; ++i) {
    const auto idx = est.index_of(map[i].first);
    const auto& e = est.estimates[idx];
    in.value(i) = map[i].second == 0 ? e.value.real() : e.value.imag();
    col[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(2 * idx) + map[i].second;
  }
  for (int i = 0; i < I::count; ++i)
    for (int j = 0; j < I::count; ++j) in.covariance(i, j) = est.covariance(col[static_cast<std::size_t>(i)], col[static_cast<std::size_t>(j)]);
  return in;
}

cplx oracle_value(const states::DensityMatrix& rho, const KernelSpec& spec) {
  using kernels::Target;
  switch (spec.target) {
    case Target::vacuum_prob: return rho(0, 0).real();
    case Target::photon_number: return states::photon_moments(rho).mean_n;
    case Target::photon_number_sq: return states::photon_moments(rho).mean_n2;
    case Target::exp_phase: return states::exp_phase_moment(rho, spec.order);
    case Target::trig_sq: {
      const auto t = states::trig_statistics(rho);
      return spec.sign > 0 ? t.mean_c2 : t.mean_s2;
    }
    case Target::moment: {
      // <a^{dag n} a^m> = sum_j rho_{j, j-m+n} sqrt(j! (j-m+n)!) / (j-m)!
      cplx s = 0.0;
      for (int j = spec.m; j <= rho.n_max(); ++j) {
        const int l = j - spec.m + spec.n;
        if (l > rho.n_max()) break;
        const double c = 0.5 * (std::lgamma(j + 1.0) + std::lgamma(l + 1.0)) - std::lgamma(j - spec.m + 1.0);
        s += rho(j, l) * std::exp(c);
      }
      return s;
    }
    case Target::exp_phase_classical: break;
  }
  throw std::invalid_argument("no oracle for kernel " + spec.to_string());
}

Derived derive(const URInputs& in, const VerifyOptions& opts) { return derive_impl(in, opts, false); }

std::vector<URReport> verify_urs(const URInputs& in, const VerifyOptions& opts) { return verify_impl(in, opts, false); }

BootstrapResult bootstrap_margins(const homodyne::QuadratureDataset& data, int resamples, std::uint64_t seed,
                                  const homodyne::ParallelOptions& par) {
  using I = URInputs;
  if (resamples < 2) throw std::invalid_argument("bootstrap: need at least 2 resamples");
  if (data.size() < 2) throw std::invalid_argument("bootstrap: dataset too small");
  const std::vector<KernelSpec> specs = {KernelSpec::exp_phase(1),  KernelSpec::exp_phase(2),      KernelSpec::vacuum_prob(),
                                         KernelSpec::photon_number(), KernelSpec::photon_number_sq(), KernelSpec::trig_sq(+1),
                                         KernelSpec::trig_sq(-1)};
  // columns of the kernel matrix feeding each input slot
  const int col[I::count] = {0, 1, 2, 3, 4, 6, 8, 10, 12};
  const auto kv = homodyne::kernel_values(data, specs, par);

  const std::size_t m = data.size();
  const std::size_t groups = data.schedule.is_grid() ? static_cast<std::size_t>(data.schedule.n_theta) : 1;
  std::vector<std::size_t> group_size(groups, 0);
  for (std::size_t i = 0; i < m; ++i) ++group_size[groups > 1 ? i % groups : 0];
  for (auto g : group_size)
    if (g == 0) throw std::invalid_argument("bootstrap: empty phase group");

  std::vector<std::array<double, 5>> margins(static_cast<std::size_t>(resamples));
  const int threads = homodyne::resolve_threads(par.threads);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int b; (b = next.fetch_add(1)) < resamples;) {
      std::mt19937_64 rng(homodyne::splitmix64(seed ^ homodyne::splitmix64(0xb0075ULL + static_cast<std::uint64_t>(b))));
      Vec v = Vec::Zero();
      for (std::size_t g = 0; g < groups; ++g) {
        std::uniform_int_distribution<std::size_t> pick(0, group_size[g] - 1);
        Vec sum = Vec::Zero();
        for (std::size_t n = 0; n < group_size[g]; ++n) {
          const std::size_t i = groups > 1 ? g + groups * pick(rng) : pick(rng);
          for (int c = 0; c < I::count; ++c) sum(c) += kv(static_cast<Eigen::Index>(i), col[c]);
        }
        v += sum / static_cast<double>(group_size[g]);
      }
      v *= 2.0 * std::numbers::pi / static_cast<double>(groups);
      const auto reps = verify_impl(inputs_from_values(v), VerifyOptions{}, true);
      for (std::size_t r = 0; r < 5; ++r) margins[static_cast<std::size_t>(b)][r] = reps[r].margin;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(threads, resamples); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  BootstrapResult res;
  res.resamples = resamples;
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0, s2 = 0.0;
    int n = 0;
    for (const auto& mg : margins)
      if (std::isfinite(mg[r])) {
        s += mg[r];
        ++n;
      }
    const double mean = n > 0 ? s / n : kNaN;
    for (const auto& mg : margins)
      if (std::isfinite(mg[r])) s2 += (mg[r] - mean) * (mg[r] - mean);
    res.finite_count[r] = n;
    res.margin_std[r] = n > 1 ? std::sqrt(s2 / (n - 1)) : kNaN;
  }
  return res;
}

std::vector<cplx> exp_moments_of_distribution(std::span<const double> density, int K) {
  if (density.empty()) throw std::invalid_argument("phase distribution: empty grid");
  if (K < 0) throw std::invalid_argument("phase distribution: K must be >= 0");
  const double h = 2.0 * std::numbers::pi / static_cast<double>(density.size());
  double norm = 0.0;
  for (double p : density) {
    if (!(p >= 0.0)) throw DomainError("phase distribution: negative or NaN density");
    norm += p;
  }
  norm *= h;
  if (std::abs(norm - 1.0) > 1e-6) throw InconsistencyError("phase distribution integrates to " + std::to_string(norm) + ", not 1");
  std::vector<cplx> out;
  for (int k = 1; k <= K; ++k) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < density.size(); ++j) s += density[j] * std::polar(1.0, k * h * static_cast<double>(j));
    out.push_back(s * h);
  }
  return out;
}

std::vector<cplx> exp_moments_of_distribution(const maxent::PhaseDistribution& p, int K) {
  return exp_moments_of_distribution(std::span<const double>(p.density), K);
}

}  // namespace nphase::analysis
