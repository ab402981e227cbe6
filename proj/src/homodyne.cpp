#include "nphase/homodyne.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace nphase::homodyne {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Runs fn(c) for c in [0, n) on up to `threads` workers; each c exactly once.
template <class Fn>
void for_each_chunk(std::size_t n, int threads, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t c = 0; c < n; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (std::size_t c; !failed && (c = next.fetch_add(1)) < n;) {
      try {
        fn(c);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(workers, n); ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void phasors(double theta, int dim, std::vector<cplx>& out) {
  out.resize(static_cast<std::size_t>(dim));
  const cplx w = std::polar(1.0, -theta);
  cplx z = 1.0;
  for (int d = 0; d < dim; ++d) {
    out[static_cast<std::size_t>(d)] = z;
    z *= w;
  }
}

// Re[c_0 + 2 sum_{d>=1} e^{-i d theta} c_d]
double assemble(const cplx* c, const std::vector<cplx>& ph) {
  double s = 0.0;
  for (std::size_t d = 1; d < ph.size(); ++d) s += ph[d].real() * c[d].real() - ph[d].imag() * c[d].imag();
  return c[0].real() + 2.0 * s;
}

}  // namespace

// ---- schedule / dataset ------------------------------------------------------

PhaseSchedule PhaseSchedule::uniform() { return {}; }

PhaseSchedule PhaseSchedule::grid(int n_theta) {
  if (n_theta < 1) throw std::invalid_argument("grid schedule: n_theta must be >= 1");
  return {Mode::grid, n_theta};
}

PhaseSchedule PhaseSchedule::parse(std::string_view text) {
  if (text == "uniform" || text == "uniform_random") return uniform();
  if (text.starts_with("grid:")) {
    const auto arg = text.substr(5);
    int n = 0;
    auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
    if (arg.empty() || ec != std::errc() || p != arg.data() + arg.size()) throw std::invalid_argument("bad grid size in '" + std::string(text) + "'");
    return grid(n);
  }
  throw std::invalid_argument("unknown phase schedule '" + std::string(text) + "' (use uniform or grid:N)");
}

std::string PhaseSchedule::to_string() const {
  return is_grid() ? "grid:" + std::to_string(n_theta) : "uniform";
}

double PhaseSchedule::grid_phase(int j) const {
  if (!is_grid() || j < 0 || j >= n_theta) throw std::out_of_range("grid_phase: index out of range");
  return kTwoPi * j / n_theta;
}

QuadratureDataset QuadratureDataset::prefix(std::size_t count) const {
  if (count > size()) throw std::out_of_range("prefix longer than dataset");
  QuadratureDataset out = *this;
  out.theta.resize(count);
  out.x.resize(count);
  return out;
}

void QuadratureDataset::validate() const {
  if (theta.size() != x.size()) throw std::invalid_argument("dataset: theta and x lengths differ");
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(theta[i] >= 0.0 && theta[i] < kTwoPi)) throw std::invalid_argument("dataset: theta outside [0, 2pi) at row " + std::to_string(i));
    if (!std::isfinite(x[i])) throw std::invalid_argument("dataset: non-finite x at row " + std::to_string(i));
    if (schedule.is_grid() && theta[i] != schedule.grid_phase(phase_index(i)))
      throw std::invalid_argument("dataset: row " + std::to_string(i) + " is not on its grid phase");
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NPHASE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// ---- sampler -------------------------------------------------------------------

QuadratureSampler::QuadratureSampler(const states::DensityMatrix& rho, double step) : dim_(rho.dim()), step_(step) {
  if (!(step > 0.0)) throw std::invalid_argument("QuadratureSampler: step must be > 0");
  const double x_max = std::sqrt(2.0 * rho.n_max()) + 5.0;
  const auto half = static_cast<long>(std::ceil(x_max / step - 1e-9));
  grid_.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long i = -half; i <= half; ++i) grid_.push_back(static_cast<double>(i) * step);

  const auto d = static_cast<std::size_t>(dim_);
  harm_.resize(grid_.size() * d);
  cum_.assign(grid_.size() * d, cplx(0.0));
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    states::quadrature_harmonics(rho, grid_[i], std::span<cplx>(harm_.data() + i * d, d));
    if (i > 0)
      for (std::size_t k = 0; k < d; ++k) cum_[i * d + k] = cum_[(i - 1) * d + k] + 0.5 * step * (harm_[(i - 1) * d + k] + harm_[i * d + k]);
  }
  // Upper bound over all theta of |1 - F(theta, x_max)|.
  const cplx* last = cum_.data() + (grid_.size() - 1) * d;
  double outside = std::abs(1.0 - last[0].real());
  for (std::size_t k = 1; k < d; ++k) outside += 2.0 * std::abs(last[k]);
  if (outside > 1e-9)
    throw TableBuildError("quadrature CDF table: mass outside [-x_max, x_max] is " + std::to_string(outside) + " > 1e-9");
}

double QuadratureSampler::cdf_node(double theta, std::size_t i) const {
  std::vector<cplx> ph;
  phasors(theta, dim_, ph);
  return assemble(cum_.data() + i * static_cast<std::size_t>(dim_), ph);
}

double QuadratureSampler::pdf_node(double theta, std::size_t i) const {
  std::vector<cplx> ph;
  phasors(theta, dim_, ph);
  return assemble(harm_.data() + i * static_cast<std::size_t>(dim_), ph);
}

std::vector<double> QuadratureSampler::cdf_table(double theta) const {
  std::vector<cplx> ph;
  phasors(theta, dim_, ph);
  std::vector<double> t(grid_.size());
  double run = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    run = std::max(run, assemble(cum_.data() + i * static_cast<std::size_t>(dim_), ph));
    t[i] = run;
  }
  return t;
}

double QuadratureSampler::invert_table(const std::vector<double>& table, const std::vector<double>& grid, double u) {
  const double target = u * table.back();
  auto it = std::upper_bound(table.begin(), table.end(), target);
  if (it == table.end()) return grid.back();
  if (it == table.begin()) return grid.front();
  const auto i = static_cast<std::size_t>(it - table.begin()) - 1;
  const double f0 = table[i], f1 = table[i + 1];
  const double frac = f1 > f0 ? (target - f0) / (f1 - f0) : 0.5;
  return grid[i] + frac * (grid[i + 1] - grid[i]);
}

double QuadratureSampler::invert(double theta, double u) const {
  thread_local std::vector<cplx> ph;
  phasors(theta, dim_, ph);
  const auto d = static_cast<std::size_t>(dim_);
  auto F = [&](std::size_t i) { return assemble(cum_.data() + i * d, ph); };
  const double target = u * F(grid_.size() - 1);
  // largest lo with F(lo) <= target
  std::size_t lo = 0, hi = grid_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (F(mid) <= target) lo = mid;
    else hi = mid;
  }
  const double f0 = F(lo), f1 = F(hi);
  const double frac = f1 > f0 ? std::clamp((target - f0) / (f1 - f0), 0.0, 1.0) : 0.5;
  return grid_[lo] + frac * step_;
}

QuadratureDataset sample_dataset(const states::DensityMatrix& rho, const PhaseSchedule& schedule, std::size_t m,
                                 std::uint64_t seed, const std::string& state_label, const ParallelOptions& par) {
  if (m < 1) throw std::invalid_argument("sample_dataset: m must be >= 1");
  if (par.chunk_size < 1) throw std::invalid_argument("sample_dataset: chunk_size must be >= 1");
  const QuadratureSampler sampler(rho);
  std::vector<std::vector<double>> tables;
  if (schedule.is_grid())
    for (int j = 0; j < schedule.n_theta; ++j) tables.push_back(sampler.cdf_table(schedule.grid_phase(j)));

  QuadratureDataset ds;
  ds.state_label = state_label;
  ds.seed = seed;
  ds.schedule = schedule;
  ds.theta.resize(m);
  ds.x.resize(m);
  const std::size_t n_chunks = (m + par.chunk_size - 1) / par.chunk_size;
  for_each_chunk(n_chunks, resolve_threads(par.threads), [&](std::size_t c) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(c)));
    const std::size_t begin = c * par.chunk_size, end = std::min(m, begin + par.chunk_size);
    for (std::size_t i = begin; i < end; ++i) {
      double th, x;
      if (schedule.is_grid()) {
        const int j = static_cast<int>(i % static_cast<std::size_t>(schedule.n_theta));
        th = schedule.grid_phase(j);
        x = QuadratureSampler::invert_table(tables[static_cast<std::size_t>(j)], sampler.grid(), uniform01(rng));
      } else {
        th = kTwoPi * uniform01(rng);
        if (th >= kTwoPi) th = 0.0;
        x = sampler.invert(th, uniform01(rng));
      }
      // keeps log|x| kernels finite; probability-zero event otherwise
      if (x == 0.0) x = 1e-12;
      ds.theta[i] = th;
      ds.x[i] = x;
    }
  });
  return ds;
}

// ---- estimation ------------------------------------------------------------------

const MomentEstimate& EstimateSet::at(const kernels::KernelSpec& spec) const { return estimates[index_of(spec)]; }

std::size_t EstimateSet::index_of(const kernels::KernelSpec& spec) const {
  for (std::size_t i = 0; i < estimates.size(); ++i)
    if (estimates[i].target == spec) return i;
  throw std::out_of_range("no estimate for " + spec.to_string());
}

namespace {

struct Moments {
  double n = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;

  explicit Moments(Eigen::Index p) : mean(Eigen::VectorXd::Zero(p)), m2(Eigen::MatrixXd::Zero(p, p)) {}

  // Chan et al. pairwise update
  void merge(const Moments& b) {
    if (b.n == 0.0) return;
    if (n == 0.0) {
      *this = b;
      return;
    }
    const double tot = n + b.n;
    const Eigen::VectorXd delta = b.mean - mean;
    mean += delta * (b.n / tot);
    m2 += b.m2 + delta * delta.transpose() * (n * b.n / tot);
    n = tot;
  }
};

}  // namespace

EstimateSet estimate_many(const QuadratureDataset& data, const std::vector<kernels::KernelSpec>& specs,
                          const ParallelOptions& par) {
  if (data.size() == 0) throw std::invalid_argument("estimate: empty dataset");
  if (data.theta.size() != data.x.size()) throw std::invalid_argument("estimate: theta and x lengths differ");
  if (specs.empty()) throw std::invalid_argument("estimate: no kernel specs");
  if (par.chunk_size < 1) throw std::invalid_argument("estimate: chunk_size must be >= 1");

  std::vector<kernels::SamplingKernel> kern;
  kern.reserve(specs.size());
  for (const auto& s : specs) kern.emplace_back(s);

  const auto p = static_cast<Eigen::Index>(2 * specs.size());
  const std::size_t groups = data.schedule.is_grid() ? static_cast<std::size_t>(data.schedule.n_theta) : 1;
  const std::size_t m = data.size();
  const std::size_t n_chunks = (m + par.chunk_size - 1) / par.chunk_size;
  std::vector<std::vector<Moments>> partial(n_chunks, std::vector<Moments>(groups, Moments(p)));

  for_each_chunk(n_chunks, resolve_threads(par.threads), [&](std::size_t c) {
    const std::size_t begin = c * par.chunk_size, end = std::min(m, begin + par.chunk_size);
    // two-pass within the chunk
    std::vector<Eigen::VectorXd> vals(end - begin, Eigen::VectorXd(p));
    auto& acc = partial[c];
    for (std::size_t i = begin; i < end; ++i) {
      auto& v = vals[i - begin];
      for (std::size_t s = 0; s < kern.size(); ++s) {
        const cplx k = kern[s](data.x[i], data.theta[i]);
        v(static_cast<Eigen::Index>(2 * s)) = k.real();
        v(static_cast<Eigen::Index>(2 * s + 1)) = k.imag();
      }
      const std::size_t g = groups > 1 ? static_cast<std::size_t>(data.phase_index(i)) : 0;
      acc[g].n += 1.0;
      acc[g].mean += v;
    }
    for (auto& a : acc)
      if (a.n > 0) a.mean /= a.n;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t g = groups > 1 ? static_cast<std::size_t>(data.phase_index(i)) : 0;
      const Eigen::VectorXd d = vals[i - begin] - acc[g].mean;
      acc[g].m2.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    for (auto& a : acc) a.m2 = a.m2.selfadjointView<Eigen::Lower>();
  });

  std::vector<Moments> total(groups, Moments(p));
  for (std::size_t c = 0; c < n_chunks; ++c)
    for (std::size_t g = 0; g < groups; ++g) total[g].merge(partial[c][g]);

  Eigen::VectorXd value = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  const double w = kTwoPi / static_cast<double>(groups);
  for (const auto& t : total) {
    if (t.n < 2.0)
      throw std::invalid_argument("estimate: every phase group needs at least 2 samples (have " + std::to_string(static_cast<long>(t.n)) + ")");
    value += w * t.mean;
    cov += (w * w) * (t.m2 / (t.n - 1.0)) / t.n;
  }

  EstimateSet out;
  out.covariance = cov;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto r = static_cast<Eigen::Index>(2 * s);
    MomentEstimate e;
    e.target = specs[s];
    e.value = {value(r), value(r + 1)};
    e.std_error_re = std::sqrt(std::max(0.0, cov(r, r)));
    e.std_error_im = std::sqrt(std::max(0.0, cov(r + 1, r + 1)));
    e.n_samples = m;
    out.estimates.push_back(e);
  }
  return out;
}

MomentEstimate estimate(const QuadratureDataset& data, const kernels::KernelSpec& spec, const ParallelOptions& par) {
  return estimate_many(data, {spec}, par).estimates.front();
}

Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> kernel_values(
    const QuadratureDataset& data, const std::vector<kernels::KernelSpec>& specs, const ParallelOptions& par) {
  if (data.theta.size() != data.x.size()) throw std::invalid_argument("kernel_values: theta and x lengths differ");
  if (par.chunk_size < 1) throw std::invalid_argument("kernel_values: chunk_size must be >= 1");
  std::vector<kernels::SamplingKernel> kern;
  for (const auto& s : specs) kern.emplace_back(s);
  const std::size_t m = data.size();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(static_cast<Eigen::Index>(m),
                                                                            static_cast<Eigen::Index>(2 * specs.size()));
  const std::size_t n_chunks = (m + par.chunk_size - 1) / par.chunk_size;
  for_each_chunk(n_chunks, resolve_threads(par.threads), [&](std::size_t c) {
    const std::size_t begin = c * par.chunk_size, end = std::min(m, begin + par.chunk_size);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t s = 0; s < kern.size(); ++s) {
        const cplx k = kern[s](data.x[i], data.theta[i]);
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * s)) = k.real();
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * s + 1)) = k.imag();
      }
  });
  return out;
}

std::vector<kernels::KernelSpec> suite_specs(int max_phase_order) {
  using kernels::KernelSpec;
  if (max_phase_order < 2) throw std::invalid_argument("suite: max phase order must be >= 2");
  std::vector<KernelSpec> s;
  for (int k = 1; k <= max_phase_order; ++k) s.push_back(KernelSpec::exp_phase(k));
  s.push_back(KernelSpec::vacuum_prob());
  s.push_back(KernelSpec::photon_number());
  s.push_back(KernelSpec::photon_number_sq());
  s.push_back(KernelSpec::trig_sq(+1));
  s.push_back(KernelSpec::trig_sq(-1));
  return s;
}

EstimateSet estimate_suite(const QuadratureDataset& data, int max_phase_order, const ParallelOptions& par) {
  return estimate_many(data, suite_specs(max_phase_order), par);
}

cplx quadrature_estimate(const states::DensityMatrix& rho, const kernels::KernelSpec& spec, int n_theta, double step) {
  if (n_theta < 1) throw std::invalid_argument("quadrature_estimate: n_theta must be >= 1");
  const QuadratureSampler sampler(rho, step);
  const kernels::SamplingKernel kern(spec);
  const auto& g = sampler.grid();
  cplx total = 0.0;
  for (int j = 0; j < n_theta; ++j) {
    const double th = kTwoPi * j / n_theta;
    cplx row = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double wt = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
      row += wt * kern(g[i] == 0.0 ? 1e-12 : g[i], th) * sampler.pdf_node(th, i);
    }
    total += row * step;
  }
  return total * (kTwoPi / n_theta);
}

}  // namespace nphase::homodyne
