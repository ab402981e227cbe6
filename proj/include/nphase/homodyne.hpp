#pragma once

// Simulated balanced-homodyne records and the direct sampling estimator
//   A = \int_0^{2pi} dtheta \int dx K_A(x, theta) p(x, theta).

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nphase/kernels.hpp"
#include "nphase/states.hpp"

namespace nphase::homodyne {

using cplx = std::complex<double>;

struct PhaseSchedule {
  enum class Mode { uniform_random, grid };
  Mode mode = Mode::uniform_random;
  int n_theta = 0;  // grid only

  static PhaseSchedule uniform();
  static PhaseSchedule grid(int n_theta);
  /// "uniform" or "grid:N".
  static PhaseSchedule parse(std::string_view text);
  std::string to_string() const;
  bool is_grid() const noexcept { return mode == Mode::grid; }
  /// theta_j = 2 pi j / n_theta.
  double grid_phase(int j) const;

  friend bool operator==(const PhaseSchedule&, const PhaseSchedule&) = default;
};

struct QuadratureDataset {
  std::vector<double> theta;
  std::vector<double> x;
  std::string state_label;
  std::uint64_t seed = 0;
  PhaseSchedule schedule;

  std::size_t size() const noexcept { return x.size(); }
  /// Grid index of sample i (round-robin assignment); -1 for the uniform schedule.
  int phase_index(std::size_t i) const {
    return schedule.is_grid() ? static_cast<int>(i % static_cast<std::size_t>(schedule.n_theta)) : -1;
  }
  /// First `count` samples (keeps the round-robin phase assignment).
  QuadratureDataset prefix(std::size_t count) const;
  /// Throws std::invalid_argument when sizes disagree, theta is outside
  /// [0, 2pi), or grid samples are not on their round-robin grid phase.
  void validate() const;
};

struct ParallelOptions {
  /// 0: NPHASE_THREADS from the environment, else hardware concurrency.
  int threads = 0;
  std::size_t chunk_size = 65536;
};

int resolve_threads(int requested);

/// Inverse-CDF sampler for p(x, theta) of a fixed state. The x grid is
/// [-x_max, x_max], x_max = sqrt(2 N_max) + 5, at `step`; the CDF in theta is
/// assembled from cumulative harmonic tables B_d(x) so any theta costs O(N_max)
/// per node.
class QuadratureSampler {
 public:
  explicit QuadratureSampler(const states::DensityMatrix& rho, double step = 0.01);

  const std::vector<double>& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  /// Unnormalized CDF at grid node i.
  double cdf_node(double theta, std::size_t i) const;
  /// Full CDF table for one phase, made monotone.
  std::vector<double> cdf_table(double theta) const;
  /// Quadrature value with CDF u in [0,1) at phase theta.
  double invert(double theta, double u) const;
  static double invert_table(const std::vector<double>& table, const std::vector<double>& grid, double u);
  /// p(x_i, theta) on the grid node i from the harmonic parts.
  double pdf_node(double theta, std::size_t i) const;

 private:
  int dim_;
  double step_;
  std::vector<double> grid_;
  std::vector<cplx> harm_;  // [i * dim + d] = A_d(x_i)
  std::vector<cplx> cum_;   // [i * dim + d] = \int_{-x_max}^{x_i} A_d
};

/// Draws m samples. Chunk c (of chunk_size samples) uses mt19937_64 seeded with
/// splitmix64(seed ^ splitmix64(c)); output does not depend on the thread count.
QuadratureDataset sample_dataset(const states::DensityMatrix& rho, const PhaseSchedule& schedule, std::size_t m,
                                 std::uint64_t seed, const std::string& state_label = {}, const ParallelOptions& par = {});

std::uint64_t splitmix64(std::uint64_t x);

struct MomentEstimate {
  kernels::KernelSpec target;
  cplx value;
  double std_error_re = 0.0;
  double std_error_im = 0.0;
  std::size_t n_samples = 0;
  /// sqrt(se_re^2 + se_im^2)
  double std_error() const { return std::hypot(std_error_re, std_error_im); }
};

/// Several estimates from one record, with the joint covariance of the
/// stacked components (re_0, im_0, re_1, im_1, ...).
struct EstimateSet {
  std::vector<MomentEstimate> estimates;
  Eigen::MatrixXd covariance;

  const MomentEstimate& at(const kernels::KernelSpec& spec) const;
  /// Index of spec in `estimates`; throws std::out_of_range when absent.
  std::size_t index_of(const kernels::KernelSpec& spec) const;
};

/// Direct sampling estimate; uniform schedule (2pi/m) sum K, grid schedule
/// (2pi/n_theta) sum_j mean_j K. Errors from the per-sample covariance.
EstimateSet estimate_many(const QuadratureDataset& data, const std::vector<kernels::KernelSpec>& specs,
                          const ParallelOptions& par = {});
MomentEstimate estimate(const QuadratureDataset& data, const kernels::KernelSpec& spec, const ParallelOptions& par = {});

/// Per-sample kernel values; columns (Re K_0, Im K_0, Re K_1, ...).
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> kernel_values(
    const QuadratureDataset& data, const std::vector<kernels::KernelSpec>& specs, const ParallelOptions& par = {});

/// Psi_1..Psi_K (K = max_phase_order >= 2), rho_00, <n>, <n^2>, <C^2>, <S^2>.
std::vector<kernels::KernelSpec> suite_specs(int max_phase_order = 2);
EstimateSet estimate_suite(const QuadratureDataset& data, int max_phase_order = 2, const ParallelOptions& par = {});

/// Deterministic replacement of the Monte Carlo average: trapezoid in theta
/// (n_theta nodes) and in x on the sampler grid.
cplx quadrature_estimate(const states::DensityMatrix& rho, const kernels::KernelSpec& spec, int n_theta = 64,
                         double step = 0.01);

}  // namespace nphase::homodyne
