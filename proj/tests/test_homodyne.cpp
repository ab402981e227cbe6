#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nphase/homodyne.hpp"

using namespace nphase;
using namespace nphase::homodyne;
using kernels::KernelSpec;
using states::StateSpec;

namespace {

constexpr double kPi = std::numbers::pi;

states::DensityMatrix state(const char* s) { return states::make_state(StateSpec::parse(s)); }

// Oracle value of a suite entry.
cplx oracle_value(const states::DensityMatrix& rho, const KernelSpec& spec) {
  using kernels::Target;
  const auto t = states::trig_statistics(rho);
  const auto pm = states::photon_moments(rho);
  switch (spec.target) {
    case Target::exp_phase: return states::exp_phase_moment(rho, spec.order);
    case Target::vacuum_prob: return rho(0, 0);
    case Target::photon_number: return pm.mean_n;
    case Target::photon_number_sq: return pm.mean_n2;
    case Target::trig_sq: return spec.sign > 0 ? t.mean_c2 : t.mean_s2;
    default: throw std::logic_error("no oracle");
  }
}

double normal_cdf(double x, double mean, double var) { return 0.5 * std::erfc(-(x - mean) / std::sqrt(2 * var)); }

}  // namespace

TEST_CASE("phase schedules") {
  const auto g = PhaseSchedule::grid(16);
  for (int j = 0; j < 16; ++j) CHECK(g.grid_phase(j) == 2 * kPi * j / 16);
  CHECK(PhaseSchedule::parse("grid:16") == g);
  CHECK(PhaseSchedule::parse("uniform") == PhaseSchedule::uniform());
  CHECK(g.to_string() == "grid:16");
  CHECK_THROWS_AS(PhaseSchedule::parse("grid:0"), std::invalid_argument);
  CHECK_THROWS_AS(PhaseSchedule::parse("grid:x"), std::invalid_argument);
  CHECK_THROWS_AS(PhaseSchedule::parse("random"), std::invalid_argument);
}

TEST_CASE("sampler tables") {
  const auto rho = state("coherent:1.2-0.4i");
  const QuadratureSampler smp(rho);
  const auto& g = smp.grid();
  CHECK(g.front() == -g.back());
  CHECK(g.back() >= std::sqrt(2.0 * rho.n_max()) + 5.0);
  for (double th : {0.0, 1.0, 4.0}) {
    const auto t = smp.cdf_table(th);
    CHECK(t.front() == 0.0);
    CHECK(std::abs(t.back() - 1.0) < 1e-9);
    CHECK(std::is_sorted(t.begin(), t.end()));
    for (std::size_t i = 0; i < g.size(); i += 97) CHECK(std::abs(smp.pdf_node(th, i) - states::quadrature_pdf(rho, g[i], th)) < 1e-13);
    // median of the shifted Gaussian
    const double mean = std::sqrt(2.0) * std::abs(cplx(1.2, -0.4)) * std::cos(th - std::arg(cplx(1.2, -0.4)));
    CHECK(std::abs(smp.invert(th, 0.5) - mean) < 1e-4);
    CHECK(std::abs(QuadratureSampler::invert_table(t, g, 0.5) - mean) < 1e-4);
  }
}

TEST_CASE("vacuum samples: <x^2> = 1/2 and Gaussian shape") {
  const auto ds = sample_dataset(state("fock:0"), PhaseSchedule::uniform(), 100000, 7);
  double s2 = 0.0;
  for (double x : ds.x) s2 += x * x;
  CHECK(std::abs(s2 / ds.size() - 0.5) < 5e-3);

  auto xs = ds.x;
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i], 0.0, 0.5);
    d = std::max({d, std::abs(f - static_cast<double>(i) / xs.size()), std::abs(f - static_cast<double>(i + 1) / xs.size())});
  }
  // Kolmogorov-Smirnov, 0.1% level
  CHECK(d * std::sqrt(static_cast<double>(xs.size())) < 1.95);
  for (double th : ds.theta) REQUIRE((th >= 0.0 && th < 2 * kPi));
}

TEST_CASE("coherent(2) on a 16-phase grid: per-phase means track sqrt2*2*cos(theta_j)") {
  const auto sch = PhaseSchedule::grid(16);
  const auto ds = sample_dataset(state("coherent:2"), sch, 160000, 11);
  ds.validate();
  std::vector<double> sum(16, 0.0);
  std::vector<int> cnt(16, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    sum[static_cast<std::size_t>(ds.phase_index(i))] += ds.x[i];
    ++cnt[static_cast<std::size_t>(ds.phase_index(i))];
  }
  for (int j = 0; j < 16; ++j) {
    const double mean = sum[static_cast<std::size_t>(j)] / cnt[static_cast<std::size_t>(j)];
    const double sigma = std::sqrt(0.5 / cnt[static_cast<std::size_t>(j)]);
    CHECK(std::abs(mean - std::sqrt(2.0) * 2.0 * std::cos(sch.grid_phase(j))) < 3 * sigma);
  }
}

TEST_CASE("squeezed vacuum: per-phase variance 0.5 (e^{-2r} cos^2 + e^{2r} sin^2)") {
  const double r = 0.6;
  const auto sch = PhaseSchedule::grid(4);
  const auto ds = sample_dataset(states::make_state(StateSpec::squeezed_vacuum(r)), sch, 200000, 5);
  for (int j = 0; j < 4; ++j) {
    double s2 = 0.0;
    int n = 0;
    for (std::size_t i = static_cast<std::size_t>(j); i < ds.size(); i += 4, ++n) s2 += ds.x[i] * ds.x[i];
    const double th = sch.grid_phase(j);
    const double var = 0.5 * (std::exp(-2 * r) * std::cos(th) * std::cos(th) + std::exp(2 * r) * std::sin(th) * std::sin(th));
    CHECK(std::abs(s2 / n - var) < 4 * var * std::sqrt(2.0 / n));
  }
}

TEST_CASE("sampling is deterministic and independent of the thread count") {
  const auto rho = state("coherent:1+0.5i");
  ParallelOptions one{1, 4096}, four{4, 4096};
  const auto a = sample_dataset(rho, PhaseSchedule::uniform(), 50000, 42, "c", one);
  const auto b = sample_dataset(rho, PhaseSchedule::uniform(), 50000, 42, "c", four);
  const auto c = sample_dataset(rho, PhaseSchedule::uniform(), 50000, 42, "c", one);
  CHECK(a.x == b.x);
  CHECK(a.theta == b.theta);
  CHECK(a.x == c.x);
  const auto d = sample_dataset(rho, PhaseSchedule::uniform(), 50000, 43, "c", one);
  CHECK(a.x != d.x);
  const auto g1 = sample_dataset(rho, PhaseSchedule::grid(8), 30000, 1, "c", one);
  const auto g4 = sample_dataset(rho, PhaseSchedule::grid(8), 30000, 1, "c", four);
  CHECK(g1.x == g4.x);

  const auto s1 = estimate_suite(a, 2, one), s4 = estimate_suite(a, 2, four);
  for (std::size_t i = 0; i < s1.estimates.size(); ++i) {
    CHECK(s1.estimates[i].value == s4.estimates[i].value);
    CHECK(s1.estimates[i].std_error_re == s4.estimates[i].std_error_re);
  }
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("estimates on vacuum, m = 1e6") {
  const auto ds = sample_dataset(state("fock:0"), PhaseSchedule::uniform(), 1000000, 2024);
  const auto n = estimate(ds, KernelSpec::photon_number());
  CHECK(std::abs(n.value.real()) < 3 * n.std_error_re);
  CHECK(n.value.imag() == 0.0);
  // 2 pi K_n = x^2 - 1/2 has variance 1/2 under the vacuum
  CHECK(n.std_error_re == doctest::Approx(std::sqrt(0.5 / 1e6)).epsilon(0.02));
  const auto p0 = estimate(ds, KernelSpec::vacuum_prob());
  CHECK(std::abs(p0.value.real() - 1.0) < 4 * p0.std_error_re);

  const auto suite = estimate_suite(ds);
  const auto rho = state("fock:0");
  for (const auto& e : suite.estimates) {
    INFO(e.target.to_string() << " " << e.value << " +- " << e.std_error());
    const cplx o = oracle_value(rho, e.target);
    CHECK(std::abs(e.value.real() - o.real()) < 4 * e.std_error_re + 1e-15);
    CHECK(std::abs(e.value.imag() - o.imag()) < 4 * e.std_error_im + 1e-15);
  }
}

TEST_CASE("suite estimates within 4 sigma of the oracles") {
  for (const char* s : {"fock:1", "coherent:1", "coherent:2"}) {
    const auto rho = state(s);
    const auto ds = sample_dataset(rho, PhaseSchedule::uniform(), 1000000, 99, s);
    const auto suite = estimate_suite(ds);
    REQUIRE(suite.covariance.rows() == 14);
    for (const auto& e : suite.estimates) {
      INFO(s << " " << e.target.to_string() << " " << e.value << " +- " << e.std_error_re << "," << e.std_error_im);
      const cplx o = oracle_value(rho, e.target);
      CHECK(std::abs(e.value.real() - o.real()) < 4 * e.std_error_re + 1e-15);
      CHECK(std::abs(e.value.imag() - o.imag()) < 4 * e.std_error_im + 1e-15);
    }
  }
}

TEST_CASE("grid schedule estimates and covariance") {
  const auto rho = state("coherent:1");
  const auto ds = sample_dataset(rho, PhaseSchedule::grid(16), 400000, 3);
  const auto suite = estimate_suite(ds);
  for (const auto& e : suite.estimates) {
    const cplx o = oracle_value(rho, e.target);
    INFO(e.target.to_string());
    CHECK(std::abs(e.value.real() - o.real()) < 4 * e.std_error_re + 1e-15);
    CHECK(std::abs(e.value.imag() - o.imag()) < 4 * e.std_error_im + 1e-15);
  }
  // covariance is symmetric PSD, diagonal matches the reported errors
  const auto& c = suite.covariance;
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-18);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff() > -1e-15);
  CHECK(std::sqrt(c(0, 0)) == doctest::Approx(suite.estimates[0].std_error_re));
  // <C^2> and <S^2> kernels share the K2 term with opposite signs
  const auto ic = static_cast<Eigen::Index>(2 * suite.index_of(KernelSpec::trig_sq(+1)));
  const auto is = static_cast<Eigen::Index>(2 * suite.index_of(KernelSpec::trig_sq(-1)));
  CHECK(c(ic, is) < 0.0);
}

TEST_CASE("standard error scales as 1/sqrt(m)") {
  const auto ds = sample_dataset(state("coherent:1"), PhaseSchedule::uniform(), 320000, 8);
  const auto full = estimate(ds, KernelSpec::exp_phase(1));
  const auto part = estimate(ds.prefix(20000), KernelSpec::exp_phase(1));
  const double ratio = part.std_error_re / full.std_error_re;
  CHECK(ratio > 3.6);
  CHECK(ratio < 4.4);
}

TEST_CASE("estimator errors") {
  QuadratureDataset empty;
  CHECK_THROWS_AS(estimate(empty, KernelSpec::photon_number()), std::invalid_argument);
  const auto small = sample_dataset(state("fock:0"), PhaseSchedule::grid(8), 10, 1);
  CHECK_THROWS_AS(estimate(small, KernelSpec::photon_number()), std::invalid_argument);
  CHECK_THROWS_AS(sample_dataset(state("fock:0"), PhaseSchedule::uniform(), 0, 1), std::invalid_argument);
  auto bad = small;
  bad.theta[3] = 0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("dense quadrature reproduces every oracle (kernel error separated from noise)") {
  for (std::string s : {"fock:0", "fock:1", "coherent:1", "coherent:2", "thermal:1", "squeezed:0.6"}) {
    const auto rho = state(s.c_str());
    for (const auto& spec : suite_specs(2)) {
      const cplx q = quadrature_estimate(rho, spec, 64);
      INFO(s << " " << spec.to_string() << " " << q);
      CHECK(std::abs(q - oracle_value(rho, spec)) < 1e-5);
    }
  }
}

TEST_CASE("grid schedules integrate the theta dependence exactly") {
  for (const char* s : {"coherent:1+0.3i", "squeezed:0.3", "thermal:0.2"}) {
    const auto rho = states::make_state(StateSpec::parse(s), 20);
    for (int k : {1, 2}) {
      const cplx coarse = quadrature_estimate(rho, KernelSpec::exp_phase(k), 64);
      const cplx dense = quadrature_estimate(rho, KernelSpec::exp_phase(k), 211);
      CHECK(std::abs(coarse - dense) < 1e-8);
    }
  }
}

TEST_CASE("constant offsets in K2 cancel exactly on phase grids") {
  const auto sch = PhaseSchedule::grid(6);
  const auto ds = sample_dataset(state("coherent:1"), sch, 60000, 17);
  const kernels::SamplingKernel k2(KernelSpec::exp_phase(2));
  std::vector<cplx> base(6, 0.0), shifted(6, 0.0);
  std::vector<double> cnt(6, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto j = static_cast<std::size_t>(ds.phase_index(i));
    const cplx v = k2(ds.x[i], ds.theta[i]);
    base[j] += v;
    shifted[j] += v + 5.0 * std::polar(1.0, 2 * ds.theta[i]);
    cnt[j] += 1.0;
  }
  cplx a = 0.0, b = 0.0;
  for (int j = 0; j < 6; ++j) {
    a += base[static_cast<std::size_t>(j)] / cnt[static_cast<std::size_t>(j)];
    b += shifted[static_cast<std::size_t>(j)] / cnt[static_cast<std::size_t>(j)];
  }
  a *= 2 * kPi / 6;
  b *= 2 * kPi / 6;
  const auto lib = estimate(ds, KernelSpec::exp_phase(2));
  CHECK(std::abs(lib.value - a) < 1e-12);
  CHECK(std::abs(b - a) < 1e-12);
}
