#pragma once

// File formats: datasets (CSV + JSON sidecar), estimates, UR reports,
// phase distributions and density matrices.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "nphase/analysis.hpp"
#include "nphase/homodyne.hpp"
#include "nphase/maxent.hpp"
#include "nphase/states.hpp"

namespace nphase::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

/// Raised for unreadable or malformed files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"n_max", "dim", "data": [[re, im], ...] row-major}
json density_to_json(const states::DensityMatrix& rho);
states::DensityMatrix density_from_json(const json& j);

/// `theta,x` in shortest round-trip form, and the sidecar next to it with the extension .json.
void write_dataset(const fs::path& csv, const homodyne::QuadratureDataset& data, const json& config = json::object());
homodyne::QuadratureDataset read_dataset(const fs::path& csv);
fs::path sidecar_path(const fs::path& file);

json estimates_to_json(const homodyne::EstimateSet& est);
homodyne::EstimateSet estimates_from_json(const json& j);

json report_to_json(const analysis::URReport& r);
json reports_to_json(const std::vector<analysis::URReport>& r);
/// relation,source,lhs,lhs_err,rhs,rhs_err,margin,margin_err,verdict,flags
std::string reports_csv_header();
std::string reports_csv_rows(const std::vector<analysis::URReport>& r, const std::string& label);

/// `phi,p` CSV and a JSON sidecar {lambdas, log_z, residuals, iterations, ...}.
void write_phase_distribution(const fs::path& csv, const maxent::PhaseDistribution& p, const json& config = json::object());
json phase_distribution_to_json(const maxent::PhaseDistribution& p);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);
void write_text(const fs::path& path, const std::string& text);

/// shortest round-trip form, "nan", "inf", "-inf"
std::string format_double(double v);

}  // namespace nphase::io
