#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "spincool/config.hpp"
#include "spincool/errors.hpp"

using namespace spincool;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal() { return json::parse(R"({"lattice":{"dims":[4,4,4]},"run":{"t_end":10}})"); }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "spincool_config_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  const RunConfig cfg = run_config_from_json(minimal());
  CHECK(cfg.lattice.dims == std::array<int, 3>{4, 4, 4});
  CHECK(cfg.lattice.periodic);
  CHECK(cfg.lattice.image_convention == ImageConvention::minimum_image_split);
  CHECK(cfg.integrator.scheme == Scheme::rk4_renorm);
  CHECK(cfg.integrator.dt == 0.01);
  CHECK(cfg.feedback.g0(0.0) == 0.2);
  CHECK(cfg.feedback.omega(0.0) == 7.0);
  CHECK(cfg.feedback.steering.fdot(0.0) == -0.005);
  CHECK(cfg.feedback.hz == 0.0);
  CHECK(cfg.feedback.detector.ideal());
  CHECK(cfg.resolved_telemetry_interval() == doctest::Approx(2.0 * std::numbers::pi / 7.0));
  CHECK(cfg.seed == 0);
  CHECK(cfg.init.kind == InitSpec::Kind::infinite_temperature);
  CHECK_FALSE(cfg.stop.target_sz);
  CHECK_FALSE(cfg.stop.halt_on_tracking_lost);
}

TEST_CASE("full config parses every section") {
  const json doc = json::parse(R"({
    "lattice": {"dims": [6, 5, 4], "periodic": false, "image_convention": "minimum_image_drop"},
    "integrator": {"scheme": "rotation_splitting", "dt": 0.005, "kernel": "direct", "threads": 2},
    "feedback": {"g0": {"table": [[0, 0.1], [100, 0.3]]}, "omega": 6.5,
                 "steering": {"kind": "stepwise", "dt_step": 2.0, "df": -0.25},
                 "hz": 0.1, "detector": {"noise_sigma": 0.5, "hold_interval": 0.2},
                 "tracking_limit": 4},
    "run": {"t_end": 50, "telemetry_interval": 0.5, "seed": 18446744073709551615,
            "init": {"aligned": [0, 0, -2]},
            "stop_rules": {"target_sz": -0.4, "halt_on_tracking_lost": true},
            "checkpoint_interval": 25}})");
  const RunConfig cfg = run_config_from_json(doc);
  CHECK_FALSE(cfg.lattice.periodic);
  CHECK(cfg.lattice.image_convention == ImageConvention::minimum_image_drop);
  CHECK(cfg.integrator.scheme == Scheme::rotation_splitting);
  CHECK(cfg.integrator.kernel == FieldKernelKind::direct);
  CHECK(cfg.integrator.threads == 2);
  CHECK(cfg.feedback.g0(50.0) == doctest::Approx(0.2));
  CHECK(cfg.feedback.steering.kind == SteeringKind::stepwise);
  CHECK(cfg.feedback.steering.df == -0.25);
  CHECK(cfg.feedback.detector.hold_interval == 0.2);
  CHECK(cfg.feedback.tracking_limit == 4.0);
  CHECK(cfg.seed == 18446744073709551615ULL);
  CHECK(cfg.init.kind == InitSpec::Kind::aligned);
  CHECK(cfg.init.direction.z() == -2.0);
  CHECK(*cfg.stop.target_sz == -0.4);
  CHECK(cfg.stop.halt_on_tracking_lost);
  CHECK(cfg.checkpoint_interval == 25.0);

  // Round trip through the serialised form.
  const RunConfig again = run_config_from_json(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));
  CHECK(again.feedback == cfg.feedback);
  CHECK(again.lattice == cfg.lattice);
}

TEST_CASE("config errors") {
  auto rejects = [](const std::string& text) {
    CHECK_THROWS_AS(run_config_from_json(json::parse(text)), ConfigError);
  };
  rejects(R"({"run":{"t_end":10}})");
  rejects(R"({"lattice":{"dims":[4,4,4]}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"run":{"t_end":0}})");
  rejects(R"({"lattice":{"dims":[4,4,0]},"run":{"t_end":1}})");
  rejects(R"({"lattice":{"dims":[4,4]},"run":{"t_end":1}})");
  rejects(R"({"lattice":{"dims":[4,4,4],"colour":"red"},"run":{"t_end":1}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"run":{"t_end":1},"extra":{}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"feedback":{"omega":-7},"run":{"t_end":1}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"integrator":{"dt":0.1},"run":{"t_end":1,"telemetry_interval":0.01}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"integrator":{"scheme":"leapfrog"},"run":{"t_end":1}})");
  rejects(R"({"lattice":{"dims":[4,4,4],"coupling_rule":"custom_table"},"run":{"t_end":1}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"run":{"t_end":"soon"}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"run":{"t_end":1,"init":"cold"}})");
  rejects(R"({"lattice":{"dims":[4,4,4]},"feedback":{"steering":{"kind":"table","table":[[1,0],[0,1]]}},"run":{"t_end":1}})");
}

TEST_CASE("schedules and tables from CSV files") {
  const fs::path sched = scratch("omega.csv");
  std::ofstream(sched) << "t,value\n0,7\n# comment\n10,8\n";
  const fs::path couplings = scratch("couplings.csv");
  std::ofstream(couplings) << "dx,dy,dz,jz,jperp\n0,0,1,-1,0.5\n1,0,0,0.5,-0.25\n";
  json doc = minimal();
  doc["feedback"]["omega"] = {{"csv", "omega.csv"}};
  doc["lattice"]["coupling_rule"] = "custom_table";
  doc["lattice"]["custom_table"] = "couplings.csv";
  const RunConfig cfg = run_config_from_json(doc, sched.parent_path());
  CHECK(cfg.feedback.omega(5.0) == doctest::Approx(7.5));
  REQUIRE(cfg.custom_couplings.size() == 2);
  CHECK(cfg.custom_couplings[1].displacement == Index3(1, 0, 0));
  CHECK(cfg.custom_couplings[1].jperp == -0.25);

  doc["feedback"]["omega"] = {{"csv", "missing.csv"}};
  CHECK_THROWS_AS(run_config_from_json(doc, sched.parent_path()), IoError);

  const fs::path bad = scratch("bad.csv");
  std::ofstream(bad) << "t,value\n0,seven\n";
  doc["feedback"]["omega"] = {{"csv", "bad.csv"}};
  CHECK_THROWS_AS(run_config_from_json(doc, sched.parent_path()), ConfigError);
}

TEST_CASE("config files") {
  const fs::path path = scratch("run.json");
  std::ofstream(path) << minimal().dump();
  CHECK(load_run_config(path).t_end == 10.0);
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_run_config(path), ConfigError);
  CHECK_THROWS_AS(load_run_config(scratch("nope.json")), IoError);
}

TEST_CASE("coupling CSV output") {
  LatticeSpec spec;
  spec.dims = {2, 2, 3};
  const auto table = build_couplings<double>(spec);
  std::ostringstream out;
  write_coupling_csv(out, table);
  std::istringstream in(out.str());
  std::string header, columns;
  std::getline(in, header);
  std::getline(in, columns);
  REQUIRE(header.rfind("# ", 0) == 0);
  const json meta = json::parse(header.substr(2));
  CHECK(meta["lattice"]["dims"] == json::array({2, 2, 3}));
  CHECK(columns == "dx,dy,dz,jz,jperp");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 12);

  // The CSV reads back as a custom table reproducing the couplings.
  const fs::path file = scratch("dump.csv");
  std::ofstream(file) << out.str();
  const auto entries = read_coupling_csv(file);
  LatticeSpec custom = spec;
  custom.coupling_rule = CouplingRule::custom_table;
  const auto rebuilt = build_couplings<double>(custom, entries);
  for (const Index3& d : table.classes()) {
    CHECK(rebuilt.jz(d) == table.jz(d));
    CHECK(rebuilt.jperp(d) == table.jperp(d));
  }
}

TEST_CASE("numbers are written round-trip exact") {
  for (double v : {0.1, -1.0 / 3.0, 6.02214076e23, 1e-300}) CHECK(std::stod(format_double(v)) == v);
}
