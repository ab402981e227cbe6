#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

#include "nphase/maxent.hpp"
#include "nphase/states.hpp"

using namespace nphase;
using namespace nphase::maxent;

namespace {

constexpr double kPi = std::numbers::pi;

// von Mises concentration with I1(a)/I0(a) = s, by bisection on series Bessel values.
double von_mises_a(double s) {
  double lo = 0.0, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle::bessel_i1_series(mid) / oracle::bessel_i0_series(mid) < s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Independent rectangle-rule moments of a grid density.
std::vector<std::complex<double>> grid_moments(const PhaseDistribution& p, int K) {
  const double h = 2.0 * kPi / static_cast<double>(p.density.size());
  std::vector<std::complex<double>> out;
  for (int k = 1; k <= K; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < p.density.size(); ++j) {
      re += p.density[j] * std::cos(k * p.grid[j]);
      im += p.density[j] * std::sin(k * p.grid[j]);
    }
    out.emplace_back(re * h, im * h);
  }
  return out;
}

std::vector<std::complex<double>> coherent_moments(std::complex<double> alpha, int K) {
  const auto rho = states::make_state(states::StateSpec::coherent(alpha));
  std::vector<std::complex<double>> m;
  for (int k = 1; k <= K; ++k) m.push_back(states::exp_phase_moment(rho, k));
  return m;
}

}  // namespace

TEST_CASE("no constraints give the uniform density") {
  const auto p = reconstruct_phase_dist({});
  CHECK(p.order() == 0);
  CHECK(p.iterations == 0);
  for (double v : p.density) CHECK(v == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));
  CHECK(p.entropy() == doctest::Approx(std::log(2.0 * kPi)).epsilon(1e-12));
}

TEST_CASE("single real moment gives the von Mises concentration") {
  const double a_ref = von_mises_a(0.44639);
  CHECK(std::abs(a_ref - 1.0) < 1e-5);  // sanity of the oracle itself
  const std::complex<double> m[] = {{0.44639, 0.0}};
  const auto p = reconstruct_phase_dist(m);
  CHECK(std::abs(p.a[0] - a_ref) < 1e-6);
  CHECK(std::abs(p.a[0] - 1.0) < 1e-6);
  CHECK(std::abs(p.b[0]) < 1e-12);
  CHECK(p.iterations <= 30);
  // closed form exp(a cos phi) / (2 pi I0(a))
  const double norm = 2.0 * kPi * oracle::bessel_i0_series(p.a[0]);
  for (std::size_t j = 0; j < p.grid.size(); j += 37)
    CHECK(std::abs(p.density[j] - std::exp(p.a[0] * std::cos(p.grid[j])) / norm) < 1e-12);
}

TEST_CASE("coherent(1) four-moment round trip") {
  const auto m = coherent_moments(1.0, 4);
  const auto p = reconstruct_phase_dist(m);
  CHECK(p.iterations <= 30);
  CHECK(!p.shrunk);
  const auto back = grid_moments(p, 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(back[k] - m[k]) < 1e-8);
  }
  CHECK(p.max_residual() < 1e-10);
  CHECK(std::acos(std::abs(back[0])) == doctest::Approx(std::acos(std::abs(m[0]))).epsilon(1e-8));
  CHECK(p.min_hessian_eigenvalue > 0.0);
}

TEST_CASE("density invariants: normalization and pointwise model form") {
  const auto m = coherent_moments({0.8, 0.6}, 3);
  const auto p = reconstruct_phase_dist(m);
  const double h = 2.0 * kPi / static_cast<double>(p.density.size());
  double z = 0.0;
  for (double v : p.density) {
    CHECK(v >= 0.0);
    z += v;
  }
  CHECK(std::abs(z * h - 1.0) < 1e-10);
  for (std::size_t j = 0; j < p.grid.size(); ++j) {
    double s = -p.log_z;
    for (int k = 0; k < p.order(); ++k) s += p.a[k] * std::cos((k + 1) * p.grid[j]) + p.b[k] * std::sin((k + 1) * p.grid[j]);
    CHECK(std::abs(p.density[j] - std::exp(s)) < 1e-12);
    CHECK(std::abs(p.model_density(p.grid[j]) - p.density[j]) < 1e-12);
  }
}

TEST_CASE("entropy does not increase with more constraints") {
  for (auto alpha : {std::complex<double>(1.0), std::complex<double>(0.5, 0.5), std::complex<double>(2.0)}) {
    const auto m = coherent_moments(alpha, 6);
    double prev = std::log(2.0 * kPi) + 1e-9;
    for (int K = 0; K <= 6; ++K) {
      const auto p = reconstruct_phase_dist(std::span(m.data(), static_cast<std::size_t>(K)));
      CHECK(p.entropy() <= prev + 1e-9);
      prev = p.entropy();
    }
  }
}

TEST_CASE("rotating the moments shifts the density cyclically") {
  const auto m = coherent_moments({0.9, 0.3}, 4);
  const auto p = reconstruct_phase_dist(m);
  const int n = static_cast<int>(p.density.size());
  for (int s : {1, 17, 256, 700}) {
    const double phi0 = 2.0 * kPi * s / n;
    std::vector<std::complex<double>> r;
    for (int k = 0; k < 4; ++k) r.push_back(m[k] * std::polar(1.0, (k + 1) * phi0));
    const auto q = reconstruct_phase_dist(r);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(q.density[j] - p.density[((j - s) % n + n) % n]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("boundary and infeasible moments") {
  const std::complex<double> outside[] = {{0.5, 0.0}, {0.0, 1.01}};
  CHECK_THROWS_AS(reconstruct_phase_dist(outside), InfeasibleError);
  const std::complex<double> nan_m[] = {{std::nan(""), 0.0}};
  CHECK_THROWS_AS(reconstruct_phase_dist(nan_m), InfeasibleError);

  // within rounding of the unit circle: pulled inside and still solved
  const std::complex<double> edge[] = {{1.0 + 5e-10, 0.0}};
  const auto p = reconstruct_phase_dist(edge);
  CHECK(p.shrunk);
  const auto back = grid_moments(p, 1);
  CHECK(std::abs(back[0] - (1.0 - 1e-9)) < 1e-10);
  CHECK(std::abs(back[0]) < 1.0);
  const std::complex<double> inner[] = {{0.999, 0.0}};
  CHECK(!reconstruct_phase_dist(inner).shrunk);

  const std::complex<double> ok[] = {{0.3, 0.2}};
  MaxentOptions bad;
  bad.n_phi = 4;
  CHECK_THROWS_AS(reconstruct_phase_dist(ok, bad), std::invalid_argument);
  bad = {};
  bad.max_iter = 1;
  bad.tol = 1e-14;
  CHECK_THROWS_AS(reconstruct_phase_dist(ok, bad), ConvergenceError);
}
