// nphase: kernel export, simulation, estimation, UR verification and
// maxent reconstruction from the command line.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nphase/analysis.hpp"
#include "nphase/errors.hpp"
#include "nphase/homodyne.hpp"
#include "nphase/io.hpp"
#include "nphase/kernels.hpp"
#include "nphase/maxent.hpp"
#include "nphase/states.hpp"

using namespace nphase;
using io::json;

namespace {

struct StageFailure {
  std::string stage;
  int code;
  std::string type;
  std::string message;
};

// exit codes by stage
int stage_code(const std::string& stage) {
  static const std::pair<const char*, int> codes[] = {{"input", 3},  {"state", 4},  {"sample", 5}, {"estimate", 6}, {"verify", 7},
                                                      {"maxent", 8}, {"output", 9}, {"kernel", 10}, {"oracle", 11}};
  for (const auto& [name, code] : codes)
    if (stage == name) return code;
  return 1;
}

std::string type_name(const std::exception& e) {
  if (dynamic_cast<const InconsistencyError*>(&e)) return "InconsistencyError";
  if (dynamic_cast<const InfeasibleError*>(&e)) return "InfeasibleError";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "ConvergenceError";
  if (dynamic_cast<const TruncationError*>(&e)) return "TruncationError";
  if (dynamic_cast<const TableBuildError*>(&e)) return "TableBuildError";
  if (dynamic_cast<const io::FormatError*>(&e)) return "FormatError";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const RangeError*>(&e)) return "RangeError";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "InvalidArgument";
  return "Error";
}

template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure{name, stage_code(name), type_name(e), e.what()};
  }
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    io::write_text(out, text);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
  if (v.empty()) throw std::invalid_argument("empty list '" + s + "'");
  return v;
}

std::pair<double, double> parse_range(const std::string& s) {
  const auto c = s.find(':', 1);
  if (c == std::string::npos) throw std::invalid_argument("range must be a:b, got '" + s + "'");
  const double a = std::stod(s.substr(0, c)), b = std::stod(s.substr(c + 1));
  if (!(a < b)) throw std::invalid_argument("range must have a < b");
  return {a, b};
}

// "re,im;re,im;..."
std::vector<std::complex<double>> parse_moments(const std::string& s) {
  std::vector<std::complex<double>> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ';');) {
    const auto v = parse_list(item);
    if (v.size() > 2) throw std::invalid_argument("moment '" + item + "' must be re or re,im");
    out.emplace_back(v[0], v.size() == 2 ? v[1] : 0.0);
  }
  return out;
}

states::DensityMatrix load_state(const std::string& spec, std::optional<int> n_max) {
  const auto parsed = stage("input", [&] { return states::StateSpec::parse(spec); });
  return stage("state", [&] { return states::make_state(parsed, n_max); });
}

json oracle_json(const std::string& label, const states::DensityMatrix& rho, int K) {
  const auto pm = states::photon_moments(rho);
  const auto t = states::trig_statistics(rho);
  const auto ps = states::phase_statistics(rho, K);
  json psi = json::array();
  for (const auto& z : ps.psi) psi.push_back({{"re", z.real()}, {"im", z.imag()}});
  auto fin = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"state", label},
          {"n_max", rho.n_max()},
          {"trace", rho.trace()},
          {"photon", {{"mean_n", pm.mean_n}, {"mean_n2", pm.mean_n2}, {"delta_n", pm.delta_n}}},
          {"trig",
           {{"mean_c", t.mean_c}, {"mean_s", t.mean_s}, {"mean_c2", t.mean_c2}, {"mean_s2", t.mean_s2},
            {"delta_c", t.delta_c}, {"delta_s", t.delta_s}, {"rho00", t.rho00}}},
          {"phase",
           {{"psi", psi}, {"mean_phase", ps.mean_phase}, {"delta_phi", ps.delta_phi}, {"sigma_bp", ps.sigma_bp},
            {"sigma_h", fin(ps.sigma_h)}, {"sigma_h_infinite", ps.sigma_h_infinite}}},
          {"ur_report", io::reports_to_json(analysis::verify_urs(analysis::oracle_inputs(rho)))}};
}

void attach_bootstrap(json& reports, const analysis::BootstrapResult& bs) {
  for (std::size_t i = 0; i < reports.size() && i < 5; ++i) {
    reports[i]["bootstrap_margin_std"] = std::isfinite(bs.margin_std[i]) ? json(bs.margin_std[i]) : json(nullptr);
    reports[i]["bootstrap_resamples"] = bs.finite_count[i];
  }
}

std::string verdict_lines(const std::vector<analysis::URReport>& reports) {
  std::ostringstream os;
  for (const auto& r : reports) {
    os << "  " << analysis::to_string(r.relation) << ": " << analysis::to_string(r.verdict) << "  margin " << io::format_double(r.margin);
    if (r.source == analysis::Source::sampled) os << " +- " << io::format_double(r.margin_err);
    for (const auto& f : r.flags) os << " [" << f << "]";
    os << '\n';
  }
  return os.str();
}

std::vector<std::complex<double>> phase_moments_of(const homodyne::EstimateSet& est, int K) {
  std::vector<std::complex<double>> m;
  for (int k = 1; k <= K; ++k) m.push_back(est.at(kernels::KernelSpec::exp_phase(k)).value);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct sampling of number-phase statistics from homodyne data"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: NPHASE_THREADS or all cores)")->check(CLI::NonNegativeNumber);
  std::size_t chunk = 65536;
  app.add_option("--chunk-size", chunk, "samples per RNG chunk")->check(CLI::PositiveNumber);

  // kernel
  auto* k_cmd = app.add_subcommand("kernel", "export a sampling kernel as CSV");
  std::string k_target, k_strategy = "hybrid", k_range = "-8:8", k_theta = "0", k_out;
  double k_step = 0.05, k_switch = 6.0;
  k_cmd->add_option("--target", k_target, "kernel spec, e.g. exp_phase:1, trig_sq:+, moment:1,2")->required();
  k_cmd->add_option("--strategy", k_strategy, "integral | series | classical | hybrid");
  k_cmd->add_option("--x-switch", k_switch, "hybrid crossover |x|");
  k_cmd->add_option("--range", k_range, "x range a:b");
  k_cmd->add_option("--step", k_step)->check(CLI::PositiveNumber);
  auto* theta_opt = k_cmd->add_option("--theta", k_theta, "comma list of phases for phase-dependent kernels");
  k_cmd->add_option("--out", k_out, "output CSV (stdout when omitted)");

  // oracle
  auto* o_cmd = app.add_subcommand("oracle", "exact statistics of a state");
  std::string o_state, o_out, o_density;
  std::optional<int> o_nmax;
  int o_K = 4;
  o_cmd->add_option("--state", o_state, "fock:3, coherent:1.0+0.5i, thermal:0.5, squeezed:0.8")->required();
  o_cmd->add_option("--n-max", o_nmax);
  o_cmd->add_option("--K", o_K, "highest exponential phase moment")->check(CLI::PositiveNumber);
  o_cmd->add_option("--out", o_out, "JSON report (stdout when omitted)");
  o_cmd->add_option("--density-out", o_density, "density matrix JSON");

  // sample
  auto* s_cmd = app.add_subcommand("sample", "simulate a homodyne record");
  std::string s_state, s_schedule = "uniform", s_out;
  std::optional<int> s_nmax;
  std::size_t s_m = 0;
  std::uint64_t s_seed = 1;
  s_cmd->add_option("--state", s_state)->required();
  s_cmd->add_option("--n-max", s_nmax);
  s_cmd->add_option("--m", s_m, "number of samples")->required()->check(CLI::PositiveNumber);
  s_cmd->add_option("--seed", s_seed);
  s_cmd->add_option("--schedule", s_schedule, "uniform | grid:N");
  s_cmd->add_option("--out", s_out, "dataset CSV; the sidecar goes next to it")->required();

  // estimate
  auto* e_cmd = app.add_subcommand("estimate", "direct sampling estimates from a record");
  std::string e_data, e_out;
  std::vector<std::string> e_targets;
  int e_K = 2;
  e_cmd->add_option("--data", e_data, "dataset CSV")->required();
  e_cmd->add_option("--target", e_targets, "kernel spec (repeatable); default is the UR suite");
  e_cmd->add_option("--max-phase-order", e_K, "suite: Psi_1..Psi_K")->check(CLI::Range(2, 64));
  e_cmd->add_option("--out", e_out, "estimates JSON (stdout when omitted)");

  // verify
  auto* v_cmd = app.add_subcommand("verify", "evaluate the number-phase uncertainty relations");
  std::string v_est, v_state, v_data, v_out, v_csv;
  std::optional<int> v_nmax;
  double v_sigma = 3.0;
  int v_boot = 0;
  std::uint64_t v_boot_seed = 1;
  auto* v_src = v_cmd->add_option_group("source");
  v_src->add_option("--estimates", v_est, "estimates JSON (sampled source)");
  v_src->add_option("--state", v_state, "state spec (oracle source)");
  v_src->require_option(1);
  v_cmd->add_option("--n-max", v_nmax);
  v_cmd->add_option("--sigma", v_sigma, "error window for violated_within_error and clamps")->check(CLI::PositiveNumber);
  v_cmd->add_option("--bootstrap", v_boot, "bootstrap resamples of the margins (needs --data)")->check(CLI::NonNegativeNumber);
  v_cmd->add_option("--bootstrap-seed", v_boot_seed);
  v_cmd->add_option("--data", v_data, "dataset CSV for --bootstrap");
  v_cmd->add_option("--out", v_out, "JSON report (stdout when omitted)");
  v_cmd->add_option("--csv", v_csv, "CSV summary");

  // maxent
  auto* m_cmd = app.add_subcommand("maxent", "maximum-entropy phase distribution from exponential moments");
  std::string m_moments, m_est, m_state, m_out;
  std::optional<int> m_nmax;
  int m_K = 4;
  maxent::MaxentOptions m_opts;
  auto* m_src = m_cmd->add_option_group("source");
  m_src->add_option("--moments", m_moments, "re,im;re,im;... for Psi_1..Psi_K");
  m_src->add_option("--estimates", m_est, "estimates JSON with exp_phase:1..K");
  m_src->add_option("--state", m_state, "oracle moments of a state");
  m_src->require_option(1);
  m_cmd->add_option("--n-max", m_nmax);
  m_cmd->add_option("--K", m_K)->check(CLI::NonNegativeNumber);
  m_cmd->add_option("--n-phi", m_opts.n_phi)->check(CLI::PositiveNumber);
  m_cmd->add_option("--tol", m_opts.tol)->check(CLI::PositiveNumber);
  m_cmd->add_option("--max-iter", m_opts.max_iter)->check(CLI::PositiveNumber);
  m_cmd->add_option("--out", m_out, "phi,p CSV; the JSON sidecar goes next to it")->required();

  // pipeline
  auto* p_cmd = app.add_subcommand("pipeline", "sample, estimate, verify and reconstruct in one run");
  std::string p_state, p_schedule = "uniform", p_out;
  std::optional<int> p_nmax;
  std::size_t p_m = 1000000;
  std::uint64_t p_seed = 42;
  int p_K = 4, p_boot = 0;
  p_cmd->add_option("--state", p_state)->required();
  p_cmd->add_option("--n-max", p_nmax);
  p_cmd->add_option("--m", p_m)->check(CLI::PositiveNumber);
  p_cmd->add_option("--seed", p_seed);
  p_cmd->add_option("--schedule", p_schedule, "uniform | grid:N");
  p_cmd->add_option("--K", p_K, "maxent order")->check(CLI::Range(2, 64));
  p_cmd->add_option("--bootstrap", p_boot)->check(CLI::NonNegativeNumber);
  p_cmd->add_option("--out", p_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  const homodyne::ParallelOptions par{threads, chunk};

  try {
    if (*k_cmd) {
      const auto spec = stage("input", [&] {
        auto s = kernels::KernelSpec::parse(k_target);
        s.strategy = kernels::parse_strategy(k_strategy);
        s.x_switch = k_switch;
        s.validate();
        return s;
      });
      const auto [a, b] = stage("input", [&] { return parse_range(k_range); });
      // exponential-phase kernels print their radial profile K_k(x) unless phases are asked for
      const bool radial_only = spec.target == kernels::Target::exp_phase || spec.target == kernels::Target::exp_phase_classical;
      const bool with_theta = spec.phase_dependent() && !(radial_only && theta_opt->count() == 0);
      const auto thetas = stage("input", [&] { return with_theta ? parse_list(k_theta) : std::vector<double>{0.0}; });
      const bool complex_valued = spec.target == kernels::Target::moment;
      const std::string csv = stage("kernel", [&] {
        std::string out = with_theta ? "x,theta," : "x,";
        out += complex_valued ? "value_re,value_im,classical\n" : "value,classical\n";
        const auto n = static_cast<long>(std::floor((b - a) / k_step + 1e-9));
        char buf[160];
        for (double th : thetas)
          for (long i = 0; i <= n; ++i) {
            const double x = a + static_cast<double>(i) * k_step;
            const auto v = kernels::evaluate(spec, x, th);
            double cl;
            try {
              cl = kernels::classical_limit(spec, x, th);
            } catch (const DomainError&) {
              cl = std::nan("");  // log|x| at the origin
            }
            std::snprintf(buf, sizeof buf, "%.10g,", x);
            out += buf;
            if (with_theta) {
              std::snprintf(buf, sizeof buf, "%.10g,", th);
              out += buf;
            }
            if (complex_valued)
              std::snprintf(buf, sizeof buf, "%.10f,%.10f,", v.real(), v.imag());
            else
              std::snprintf(buf, sizeof buf, "%.10f,", v.real());
            out += buf;
            out += std::isfinite(cl) ? (std::snprintf(buf, sizeof buf, "%.10f", cl), std::string(buf)) : io::format_double(cl);
            out += '\n';
          }
        return out;
      });
      stage("output", [&] { emit(k_out, csv); });
    } else if (*o_cmd) {
      const auto rho = load_state(o_state, o_nmax);
      const json j = stage("oracle", [&] { return oracle_json(o_state, rho, o_K); });
      stage("output", [&] {
        emit(o_out, j.dump(2) + "\n");
        if (!o_density.empty()) io::write_json(o_density, io::density_to_json(rho));
      });
    } else if (*s_cmd) {
      const auto schedule = stage("input", [&] { return homodyne::PhaseSchedule::parse(s_schedule); });
      const auto rho = load_state(s_state, s_nmax);
      const auto data = stage("sample", [&] {
        return homodyne::sample_dataset(rho, schedule, s_m, s_seed, s_state, par);
      });
      const json config = {{"command", "sample"}, {"state", s_state}, {"n_max", rho.n_max()}, {"m", s_m},
                           {"seed", s_seed},      {"schedule", schedule.to_string()}, {"chunk_size", chunk}};
      stage("output", [&] { io::write_dataset(s_out, data, config); });
    } else if (*e_cmd) {
      const auto data = stage("input", [&] { return io::read_dataset(e_data); });
      const auto est = stage("estimate", [&] {
        if (e_targets.empty()) return homodyne::estimate_suite(data, e_K, par);
        std::vector<kernels::KernelSpec> specs;
        for (const auto& t : e_targets) specs.push_back(kernels::KernelSpec::parse(t));
        return homodyne::estimate_many(data, specs, par);
      });
      json j = io::estimates_to_json(est);
      j["dataset"] = {{"file", e_data}, {"state_label", data.state_label}, {"seed", data.seed}, {"schedule", data.schedule.to_string()}};
      j["version"] = io::kVersion;
      stage("output", [&] { emit(e_out, j.dump(2) + "\n"); });
    } else if (*v_cmd) {
      analysis::VerifyOptions opts;
      opts.sigma_threshold = v_sigma;
      std::vector<analysis::URReport> reports;
      std::string label;
      if (!v_est.empty()) {
        const auto est = stage("input", [&] { return io::estimates_from_json(io::read_json(v_est)); });
        reports = stage("verify", [&] { return analysis::verify_urs(analysis::sampled_inputs(est), opts); });
        label = v_est;
      } else {
        const auto rho = load_state(v_state, v_nmax);
        reports = stage("verify", [&] { return analysis::verify_urs(analysis::oracle_inputs(rho), opts); });
        label = v_state;
      }
      json j = io::reports_to_json(reports);
      if (v_boot > 0) {
        if (v_data.empty()) throw StageFailure{"input", stage_code("input"), "InvalidArgument", "--bootstrap needs --data"};
        const auto data = stage("input", [&] { return io::read_dataset(v_data); });
        attach_bootstrap(j, stage("verify", [&] { return analysis::bootstrap_margins(data, v_boot, v_boot_seed, par); }));
      }
      stage("output", [&] {
        emit(v_out, j.dump(2) + "\n");
        if (!v_csv.empty()) io::write_text(v_csv, io::reports_csv_header() + io::reports_csv_rows(reports, label));
      });
    } else if (*m_cmd) {
      std::vector<std::complex<double>> moments;
      if (!m_moments.empty()) {
        moments = stage("input", [&] { return parse_moments(m_moments); });
      } else if (!m_est.empty()) {
        const auto est = stage("input", [&] { return io::estimates_from_json(io::read_json(m_est)); });
        moments = stage("input", [&] { return phase_moments_of(est, m_K); });
      } else {
        const auto rho = load_state(m_state, m_nmax);
        for (int k = 1; k <= m_K; ++k) moments.push_back(states::exp_phase_moment(rho, k));
      }
      const auto p = stage("maxent", [&] { return maxent::reconstruct_phase_dist(moments, m_opts); });
      json input = json::array();
      for (const auto& z : moments) input.push_back({z.real(), z.imag()});
      const json config = {{"command", "maxent"}, {"moments", input}, {"n_phi", m_opts.n_phi}, {"tol", m_opts.tol}, {"max_iter", m_opts.max_iter}};
      stage("output", [&] { io::write_phase_distribution(m_out, p, config); });
    } else if (*p_cmd) {
      const io::fs::path dir(p_out);
      const auto schedule = stage("input", [&] { return homodyne::PhaseSchedule::parse(p_schedule); });
      const auto rho = load_state(p_state, p_nmax);
      const json config = {{"command", "pipeline"}, {"version", io::kVersion}, {"state", p_state},
                           {"n_max", rho.n_max()},  {"m", p_m},                  {"seed", p_seed},
                           {"schedule", schedule.to_string()}, {"K", p_K},       {"bootstrap", p_boot},
                           {"chunk_size", chunk}};
      stage("output", [&] { io::write_json(dir / "config.json", config); });

      const auto oracle = stage("oracle", [&] { return oracle_json(p_state, rho, p_K); });
      stage("output", [&] { io::write_json(dir / "oracle.json", oracle); });

      const auto data = stage("sample", [&] { return homodyne::sample_dataset(rho, schedule, p_m, p_seed, p_state, par); });
      stage("output", [&] { io::write_dataset(dir / "dataset.csv", data, config); });

      const auto est = stage("estimate", [&] { return homodyne::estimate_suite(data, p_K, par); });
      json comparison = json::array();
      double worst = 0.0;
      for (const auto& e : est.estimates) {
        const auto o = analysis::oracle_value(rho, e.target);
        const double z_re = e.std_error_re > 0 ? (e.value.real() - o.real()) / e.std_error_re : 0.0;
        const double z_im = e.std_error_im > 0 ? (e.value.imag() - o.imag()) / e.std_error_im : 0.0;
        worst = std::max({worst, std::abs(z_re), std::abs(z_im)});
        comparison.push_back({{"target", e.target.to_string()}, {"sampled_re", e.value.real()}, {"sampled_im", e.value.imag()},
                              {"oracle_re", o.real()},           {"oracle_im", o.imag()},        {"z_re", z_re},
                              {"z_im", z_im}});
      }
      stage("output", [&] {
        io::write_json(dir / "estimates.json", io::estimates_to_json(est));
        io::write_json(dir / "comparison.json", {{"estimates", comparison}, {"max_abs_z", worst}});
      });

      const auto sampled = stage("verify", [&] { return analysis::verify_urs(analysis::sampled_inputs(est)); });
      json rep = io::reports_to_json(sampled);
      if (p_boot > 0) attach_bootstrap(rep, stage("verify", [&] { return analysis::bootstrap_margins(data, p_boot, p_seed, par); }));
      stage("output", [&] {
        io::write_json(dir / "ur_report.json", rep);
        io::write_json(dir / "ur_oracle.json", oracle.at("ur_report"));
      });

      const auto p = stage("maxent", [&] { return maxent::reconstruct_phase_dist(phase_moments_of(est, p_K)); });
      stage("output", [&] { io::write_phase_distribution(dir / "phase_dist.csv", p, config); });

      std::cout << "state " << p_state << ", m = " << p_m << ", seed " << p_seed << ", schedule " << schedule.to_string() << "\n"
                << "largest |z| of sampled vs oracle: " << io::format_double(worst) << "\n"
                << "sampled UR verdicts:\n"
                << verdict_lines(sampled) << "maxent K = " << p_K << ": " << p.iterations << " iterations, max residual "
                << io::format_double(p.max_residual()) << (p.shrunk ? " (moments shrunk onto the interior)" : "") << "\n"
                << "outputs in " << dir.string() << "\n";
    }
  } catch (const StageFailure& f) {
    std::cerr << json({{"stage", f.stage}, {"error", f.type}, {"message", f.message}, {"exit_code", f.code}}).dump() << "\n";
    return f.code;
  }
  return 0;
}
