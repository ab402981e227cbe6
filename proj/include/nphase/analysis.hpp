#pragma once

// Number-phase uncertainty relations from oracle statistics or sampled
// estimates, with first-order error propagation and explicit verdicts.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nphase/homodyne.hpp"
#include "nphase/maxent.hpp"
#include "nphase/states.hpp"

namespace nphase::analysis {

using cplx = std::complex<double>;

enum class Relation { tan_ur, holevo, nC, nS, CS };
enum class Verdict { satisfied, violated, violated_within_error, indeterminate };
enum class Source { oracle, sampled };

std::string_view to_string(Relation r);
std::string_view to_string(Verdict v);
std::string_view to_string(Source s);

/// The nine real inputs every relation is built from, with their covariance
/// (zero for oracle inputs).
struct URInputs {
  enum Index { psi1_re, psi1_im, psi2_re, psi2_im, rho00, mean_n, mean_n2, mean_c2, mean_s2, count };
  Source source = Source::oracle;
  Eigen::Matrix<double, count, 1> value = Eigen::Matrix<double, count, 1>::Zero();
  Eigen::Matrix<double, count, count> covariance = Eigen::Matrix<double, count, count>::Zero();
};

URInputs oracle_inputs(const states::DensityMatrix& rho);
/// Needs exp_phase:1, exp_phase:2, vacuum_prob, photon_number, photon_number_sq, trig_sq:+, trig_sq:- in the set.
URInputs sampled_inputs(const homodyne::EstimateSet& est);

/// Exact expectation value of the quantity a kernel samples; throws
/// std::invalid_argument for the classical exponential-phase kernels.
cplx oracle_value(const states::DensityMatrix& rho, const kernels::KernelSpec& spec);

/// Value with a linear error model: gradient over the URInputs components
/// plus an additive variance for points where the derivative does not exist.
struct Uncertain {
  double value = 0.0;
  Eigen::Matrix<double, URInputs::count, 1> grad = Eigen::Matrix<double, URInputs::count, 1>::Zero();
  double extra_var = 0.0;

  static Uncertain input(const URInputs& in, URInputs::Index i);
  static Uncertain constant(double v);
  double error(const URInputs& in) const;
};

struct URReport {
  Relation relation;
  Source source;
  double lhs = 0.0, lhs_err = 0.0;
  double rhs = 0.0, rhs_err = 0.0;
  double margin = 0.0, margin_err = 0.0;
  Verdict verdict = Verdict::indeterminate;
  std::vector<std::string> flags;
  // CS only: the (1/2) rho_00 variant next to the commutator bound (1/4) rho_00
  std::optional<double> half_rhs, half_rhs_err, half_margin, half_margin_err;
  std::optional<Verdict> half_verdict;

  bool has_flag(std::string_view f) const;
};

struct VerifyOptions {
  double sigma_threshold = 3.0;  // violated_within_error / clamp window
  double oracle_slack = 1e-12;
};

/// Derived uncertainty measures shared by the relations.
struct Derived {
  Uncertain delta_n, delta_n_sq;
  Uncertain abs_psi1, tan_dphi;  // tan_dphi meaningless when sigma_h_infinite
  Uncertain delta_c, delta_s;
  bool sigma_h_infinite = false;
  /// sampled |Psi_1| within sigma_threshold of zero: sigma_H may be infinite
  bool psi1_consistent_with_zero = false;
  std::vector<std::string> flags;
};

/// Throws InconsistencyError when a sampled variance is negative beyond
/// sigma_threshold of its own error; closer negatives are clamped to 0 and flagged.
Derived derive(const URInputs& in, const VerifyOptions& opts = {});

std::vector<URReport> verify_urs(const URInputs& in, const VerifyOptions& opts = {});

/// Bootstrap standard deviation of each relation's margin (order of Relation),
/// resampling samples with replacement (within each phase group on grids).
struct BootstrapResult {
  std::array<double, 5> margin_std{};
  std::array<int, 5> finite_count{};
  int resamples = 0;
};
BootstrapResult bootstrap_margins(const homodyne::QuadratureDataset& data, int resamples = 200, std::uint64_t seed = 1,
                                  const homodyne::ParallelOptions& par = {});

/// Psi_k = \int e^{ik phi} p(phi) d phi, k = 1..K, on a periodic uniform grid.
/// Throws DomainError for negative density, InconsistencyError when the
/// density integrates to 1 +- more than 1e-6.
std::vector<cplx> exp_moments_of_distribution(std::span<const double> density, int K);
std::vector<cplx> exp_moments_of_distribution(const maxent::PhaseDistribution& p, int K);

}  // namespace nphase::analysis
