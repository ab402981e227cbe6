#pragma once

// Truncated Fock-basis density matrices and the exact expectation values
// used as oracles for the sampled estimates.

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nphase/errors.hpp"

namespace nphase::states {

using cplx = std::complex<double>;

inline constexpr int kDefaultNMaxCap = 512;
inline constexpr double kTraceTarget = 1.0 - 1e-10;

struct StateSpec {
  enum class Kind { fock, coherent, thermal, squeezed_vacuum };
  Kind kind = Kind::fock;
  int n = 0;           // fock
  cplx alpha = 0.0;    // coherent
  double nbar = 0.0;   // thermal
  double r = 0.0;      // squeezed_vacuum

  static StateSpec fock(int n);
  static StateSpec coherent(cplx alpha);
  static StateSpec thermal(double nbar);
  static StateSpec squeezed_vacuum(double r);

  /// "fock:3", "coherent:1.0+0.5i", "coherent:2", "thermal:0.5", "squeezed:0.8".
  static StateSpec parse(std::string_view text);
  std::string to_string() const;
};

class DensityMatrix {
 public:
  /// Takes ownership of a square matrix; checks Hermiticity (to 1e-12, then
  /// symmetrizes), non-negative diagonal and trace in [1 - 1e-10, 1 + 1e-12].
  explicit DensityMatrix(Eigen::MatrixXcd m);

  int n_max() const noexcept { return static_cast<int>(rho_.rows()) - 1; }
  int dim() const noexcept { return static_cast<int>(rho_.rows()); }
  cplx operator()(int n, int np) const { return rho_(n, np); }
  const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }
  double trace() const { return rho_.diagonal().real().sum(); }

  /// e^{i phi0 n} rho e^{-i phi0 n}: Psi_k picks up e^{i k phi0}, the mean phase moves by +phi0.
  DensityMatrix rotated(double phi0) const;

 private:
  Eigen::MatrixXcd rho_;
};

/// With n_max unset the truncation grows until the trace reaches 1 - 1e-10,
/// capped at `cap`. An explicit n_max must also reach the target.
DensityMatrix make_state(const StateSpec& spec, std::optional<int> n_max = std::nullopt, int cap = kDefaultNMaxCap);

/// p(x, theta) = sum e^{i(n'-n) theta} psi_n psi_n' rho_nn'. Tiny negative
/// round-off is returned as is.
double quadrature_pdf(const DensityMatrix& rho, double x, double theta);

/// Harmonic parts A_d(x) = sum_n psi_{n+d}(x) psi_n(x) rho_{n+d,n}, d = 0..n_max,
/// so that p(x, theta) = A_0 + 2 Re sum_{d>=1} e^{-i d theta} A_d.
void quadrature_harmonics(const DensityMatrix& rho, double x, std::span<cplx> out);

/// Psi_k = sum_n rho_{n+k,n}.
cplx exp_phase_moment(const DensityMatrix& rho, int k);

struct PhotonMoments {
  double mean_n;
  double mean_n2;
  double delta_n;
};
PhotonMoments photon_moments(const DensityMatrix& rho);

struct TrigStatistics {
  double mean_c, mean_s;
  double mean_c2, mean_s2;
  double delta_c, delta_s;
  double rho00;
};
TrigStatistics trig_statistics(const DensityMatrix& rho);

struct PhaseStatistics {
  std::vector<cplx> psi;  // Psi_1 .. Psi_K
  double mean_phase;      // arg Psi_1; 0 when Psi_1 = 0
  double delta_phi;       // arccos |Psi_1|, in [0, pi/2]
  double sigma_bp;        // sin delta_phi
  double sigma_h;         // tan delta_phi, +inf when sigma_h_infinite
  bool sigma_h_infinite;
};

/// Assembles the phase statistics from given moments (|Psi_1| is clipped to 1).
PhaseStatistics phase_statistics_from(std::vector<cplx> psi);
PhaseStatistics phase_statistics(const DensityMatrix& rho, int K);

}  // namespace nphase::states
