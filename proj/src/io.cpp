#include "nphase/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nphase::io {

namespace {

// NaN and infinities have no JSON number form; they go out as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double parse_double(std::string_view s, const fs::path& file, std::size_t line) {
  double v = 0.0;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw FormatError(file.string() + ":" + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path.string());
  f << text;
  if (!f) throw FormatError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path sidecar_path(const fs::path& file) {
  fs::path p = file;
  return p.replace_extension(".json");
}

json density_to_json(const states::DensityMatrix& rho) {
  json data = json::array();
  for (int r = 0; r < rho.dim(); ++r)
    for (int c = 0; c < rho.dim(); ++c) data.push_back({rho(r, c).real(), rho(r, c).imag()});
  return {{"n_max", rho.n_max()}, {"dim", rho.dim()}, {"data", std::move(data)}};
}

states::DensityMatrix density_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  const auto& data = j.at("data");
  if (dim < 1 || data.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
    throw FormatError("density matrix: data length does not match dim");
  Eigen::MatrixXcd m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      const auto& z = data[static_cast<std::size_t>(r * dim + c)];
      m(r, c) = {z.at(0).get<double>(), z.at(1).get<double>()};
    }
  return states::DensityMatrix(std::move(m));
}

void write_dataset(const fs::path& csv, const homodyne::QuadratureDataset& data, const json& config) {
  std::string out = "theta,x\n";
  out.reserve(out.size() + data.size() * 48);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += format_double(data.theta[i]);
    out += ',';
    out += format_double(data.x[i]);
    out += '\n';
  }
  write_text(csv, out);
  json side = {{"state_label", data.state_label},
               {"seed", data.seed},
               {"schedule", data.schedule.to_string()},
               {"m", data.size()},
               {"version", kVersion},
               {"config", config}};
  write_json(sidecar_path(csv), side);
}

homodyne::QuadratureDataset read_dataset(const fs::path& csv) {
  homodyne::QuadratureDataset d;
  const json side = read_json(sidecar_path(csv));
  d.state_label = side.value("state_label", "");
  d.seed = side.value("seed", std::uint64_t{0});
  d.schedule = homodyne::PhaseSchedule::parse(side.value("schedule", "uniform"));

  std::ifstream f(csv);
  if (!f) throw FormatError("cannot open " + csv.string());
  std::string line;
  std::size_t ln = 1;
  if (!std::getline(f, line) || line.rfind("theta,x", 0) != 0) throw FormatError(csv.string() + ": expected header 'theta,x'");
  while (std::getline(f, line)) {
    ++ln;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(csv.string() + ":" + std::to_string(ln) + ": expected two columns");
    const std::string_view sv(line);
    d.theta.push_back(parse_double(sv.substr(0, comma), csv, ln));
    d.x.push_back(parse_double(sv.substr(comma + 1), csv, ln));
  }
  if (side.contains("m") && side["m"].get<std::size_t>() != d.size())
    throw FormatError(csv.string() + ": sidecar says m = " + side["m"].dump() + " but the file has " + std::to_string(d.size()) + " rows");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(csv.string() + ": " + e.what());
  }
  return d;
}

json estimates_to_json(const homodyne::EstimateSet& est) {
  json arr = json::array();
  for (const auto& e : est.estimates)
    arr.push_back({{"target", e.target.to_string()},
                   {"value_re", e.value.real()},
                   {"value_im", e.value.imag()},
                   {"std_error", e.std_error()},
                   {"std_error_re", e.std_error_re},
                   {"std_error_im", e.std_error_im},
                   {"n_samples", e.n_samples}});
  json cov = json::array();
  for (Eigen::Index r = 0; r < est.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < est.covariance.cols(); ++c) row.push_back(est.covariance(r, c));
    cov.push_back(std::move(row));
  }
  return {{"estimates", std::move(arr)}, {"covariance", std::move(cov)}};
}

homodyne::EstimateSet estimates_from_json(const json& j) {
  homodyne::EstimateSet est;
  try {
    for (const auto& e : j.at("estimates")) {
      homodyne::MomentEstimate m;
      m.target = kernels::KernelSpec::parse(e.at("target").get<std::string>());
      m.value = {e.at("value_re").get<double>(), e.at("value_im").get<double>()};
      m.std_error_re = e.at("std_error_re").get<double>();
      m.std_error_im = e.at("std_error_im").get<double>();
      m.n_samples = e.at("n_samples").get<std::size_t>();
      est.estimates.push_back(m);
    }
    const auto n = static_cast<Eigen::Index>(2 * est.estimates.size());
    const auto& cov = j.at("covariance");
    if (cov.size() != static_cast<std::size_t>(n)) throw FormatError("estimates: covariance has the wrong size");
    est.covariance.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = cov[static_cast<std::size_t>(r)];
      if (row.size() != static_cast<std::size_t>(n)) throw FormatError("estimates: covariance has the wrong size");
      for (Eigen::Index c = 0; c < n; ++c) est.covariance(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("estimates: ") + e.what());
  }
  return est;
}

json report_to_json(const analysis::URReport& r) {
  json j = {{"relation", analysis::to_string(r.relation)},
            {"source", analysis::to_string(r.source)},
            {"lhs", number(r.lhs)},
            {"lhs_err", number(r.lhs_err)},
            {"rhs", number(r.rhs)},
            {"rhs_err", number(r.rhs_err)},
            {"margin", number(r.margin)},
            {"margin_err", number(r.margin_err)},
            {"verdict", analysis::to_string(r.verdict)},
            {"flags", r.flags}};
  if (std::isinf(r.lhs)) j["lhs_infinite"] = true;
  if (r.half_rhs) {
    j["half_bound"] = {{"rhs", number(*r.half_rhs)},
                        {"rhs_err", number(*r.half_rhs_err)},
                        {"margin", number(*r.half_margin)},
                        {"margin_err", number(*r.half_margin_err)},
                        {"verdict", analysis::to_string(*r.half_verdict)}};
  }
  return j;
}

json reports_to_json(const std::vector<analysis::URReport>& r) {
  json arr = json::array();
  for (const auto& x : r) arr.push_back(report_to_json(x));
  return arr;
}

std::string reports_csv_header() { return "state,relation,source,lhs,lhs_err,rhs,rhs_err,margin,margin_err,verdict,flags\n"; }

std::string reports_csv_rows(const std::vector<analysis::URReport>& reports, const std::string& label) {
  std::ostringstream os;
  for (const auto& r : reports) {
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
    os << label << ',' << analysis::to_string(r.relation) << ',' << analysis::to_string(r.source) << ',' << format_double(r.lhs) << ','
       << format_double(r.lhs_err) << ',' << format_double(r.rhs) << ',' << format_double(r.rhs_err) << ',' << format_double(r.margin)
       << ',' << format_double(r.margin_err) << ',' << analysis::to_string(r.verdict) << ',' << flags << '\n';
  }
  return os.str();
}

json phase_distribution_to_json(const maxent::PhaseDistribution& p) {
  return {{"K", p.order()},
          {"n_phi", p.density.size()},
          {"lambdas", {{"a", p.a}, {"b", p.b}}},
          {"log_z", p.log_z},
          {"residuals", p.residuals},
          {"max_residual", p.max_residual()},
          {"iterations", p.iterations},
          {"shrunk", p.shrunk},
          {"entropy", p.entropy()},
          {"min_hessian_eigenvalue", number(p.min_hessian_eigenvalue)}};
}

void write_phase_distribution(const fs::path& csv, const maxent::PhaseDistribution& p, const json& config) {
  std::string out = "phi,p\n";
  for (std::size_t j = 0; j < p.grid.size(); ++j) out += format_double(p.grid[j]) + "," + format_double(p.density[j]) + "\n";
  write_text(csv, out);
  json side = phase_distribution_to_json(p);
  side["version"] = kVersion;
  side["config"] = config;
  write_json(sidecar_path(csv), side);
}

}  // namespace nphase::io
