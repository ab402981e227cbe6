#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nphase/io.hpp"

using namespace nphase;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nphase_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("dataset CSV and sidecar round trip bit for bit") {
  const auto rho = states::make_state(states::StateSpec::squeezed_vacuum(0.4));
  const auto data = homodyne::sample_dataset(rho, homodyne::PhaseSchedule::grid(5), 2003, 9, "squeezed:0.4");
  const auto path = scratch("ds.csv");
  io::write_dataset(path, data, {{"note", "x"}});
  const auto back = io::read_dataset(path);
  CHECK(back.theta == data.theta);
  CHECK(back.x == data.x);
  CHECK(back.seed == 9);
  CHECK(back.state_label == "squeezed:0.4");
  CHECK(back.schedule == data.schedule);
  const auto side = io::read_json(io::sidecar_path(path));
  CHECK(side["m"] == 2003);
  CHECK(side["config"]["note"] == "x");
}

TEST_CASE("malformed datasets are rejected") {
  const auto path = scratch("bad.csv");
  io::write_text(io::sidecar_path(path), R"({"state_label":"","seed":1,"schedule":"uniform","m":2})");
  io::write_text(path, "theta,x\n0.5,1.0\n0.5,abc\n");
  CHECK_THROWS_AS(io::read_dataset(path), io::FormatError);
  io::write_text(path, "theta,x\n0.5,1.0\n");
  CHECK_THROWS_AS(io::read_dataset(path), io::FormatError);  // m mismatch
  io::write_text(path, "theta,x\n0.5,1.0\n7.0,1.0\n");
  CHECK_THROWS_AS(io::read_dataset(path), io::FormatError);  // theta outside [0, 2pi)
  CHECK_THROWS_AS(io::read_dataset(scratch("missing.csv")), io::FormatError);
}

TEST_CASE("estimates survive JSON") {
  const auto rho = states::make_state(states::StateSpec::coherent({0.5, 0.5}));
  const auto data = homodyne::sample_dataset(rho, homodyne::PhaseSchedule::uniform(), 5000, 3);
  const auto est = homodyne::estimate_suite(data);
  const auto j = io::estimates_to_json(est);
  const auto back = io::estimates_from_json(io::json::parse(j.dump()));
  REQUIRE(back.estimates.size() == est.estimates.size());
  for (std::size_t i = 0; i < est.estimates.size(); ++i) {
    CHECK(back.estimates[i].target == est.estimates[i].target);
    CHECK(back.estimates[i].value == est.estimates[i].value);
    CHECK(back.estimates[i].std_error_re == est.estimates[i].std_error_re);
  }
  CHECK(back.covariance == est.covariance);
  CHECK(j["estimates"][0]["std_error"] == est.estimates[0].std_error());
}

TEST_CASE("density matrix JSON") {
  const auto rho = states::make_state(states::StateSpec::coherent({0.3, -0.2}), 8);
  const auto j = io::density_to_json(rho);
  CHECK(j["data"].size() == 81);
  const auto back = io::density_from_json(io::json::parse(j.dump()));
  CHECK(back.matrix() == rho.matrix());
  auto broken = j;
  broken["dim"] = 3;
  CHECK_THROWS_AS(io::density_from_json(broken), io::FormatError);
}

TEST_CASE("UR reports serialize non-finite values as null") {
  const auto r = analysis::verify_urs(analysis::oracle_inputs(states::make_state(states::StateSpec::fock(0))));
  const auto j = io::reports_to_json(r);
  CHECK(j[0]["lhs"].is_null());
  CHECK(j[0]["verdict"] == "indeterminate");
  CHECK(j[4]["half_bound"]["verdict"] == "violated");
  const auto csv = io::reports_csv_rows(r, "fock:0");
  CHECK(csv.find("fock:0,tan_ur,oracle,nan") == 0);
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-INFINITY) == "-inf");
}
