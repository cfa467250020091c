#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "spincool/errors.hpp"
#include "spincool/experiment.hpp"
#include "spincool/observables.hpp"

using namespace spincool;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "spincool_experiment_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig driven_config() {
  return run_config_from_json(json::parse(R"({
    "lattice": {"dims": [3, 3, 4]},
    "feedback": {"g0": 0.3, "omega": 7, "steering": {"fdot": -0.05},
                 "detector": {"noise_sigma": 0.5, "hold_interval": 0.05}},
    "run": {"t_end": 100, "seed": 2024, "telemetry_interval": 0.5}})"));
}

}  // namespace

TEST_CASE("infinite-temperature sampling") {
  SplitMix64 a(42), b(42);
  const auto s1 = sample_infinite_temperature<double>(500, a);
  const auto s2 = sample_infinite_temperature<double>(500, b);
  CHECK(s1.spins == s2.spins);
  CHECK(s1.t == 0.0);
  CHECK(max_norm_error(s1.spins) <= 1e-15);

  const int n = 1000, ensembles = 10000;
  SplitMix64 rng = SplitMix64::derive(9, kInitStream);
  double sum = 0.0;
  for (int k = 0; k < ensembles; ++k) sum += sample_infinite_temperature<double>(n, rng).spins.col(2).sum();
  CHECK(std::abs(sum / ensembles) <= 3.0 * std::sqrt(n / 3.0 / ensembles));
}

TEST_CASE("undriven run conserves M_z and energy") {
  RunConfig cfg = run_config_from_json(json::parse(R"({
    "lattice": {"dims": [4, 4, 4]}, "feedback": {"g0": 0},
    "run": {"t_end": 100, "seed": 7, "telemetry_interval": 1}})"));
  VectorSink sink;
  const RunResult r = run(cfg, sink);
  REQUIRE(sink.records.size() == 101);
  const auto& first = sink.records.front();
  CHECK(first.t == 0.0);
  CHECK(sink.records.back().t == doctest::Approx(100.0));
  double worst_mz = 0.0, worst_e = 0.0;
  for (const auto& rec : sink.records) {
    worst_mz = std::max(worst_mz, std::abs(rec.mz - first.mz));
    worst_e = std::max(worst_e, std::abs(rec.e - first.e) / std::abs(first.e));
    CHECK(rec.g == 0.0);
  }
  CHECK(worst_mz <= 1e-8 * 64);
  CHECK(worst_e <= 1e-6);
  CHECK(r.status == RunStatus::completed);
  CHECK(r.steps == 10000);
  CHECK(std::abs(r.final_sz) <= 1.0);
  CHECK(max_norm_error(r.final_state.spins) <= 1e-9);
}

TEST_CASE("telemetry g and f follow the drive formula") {
  RunConfig cfg = driven_config();
  cfg.feedback.detector = DetectorModel{};
  cfg.t_end = 5;
  VectorSink sink;
  run(cfg, sink);
  for (const auto& rec : sink.records) {
    CHECK(rec.f == doctest::Approx(-0.05 * rec.t));
    CHECK(rec.g == doctest::Approx(0.3 * std::cos(7.0 * rec.t) * (rec.f - rec.mz)));
  }
}

TEST_CASE("resume continues bit-identically") {
  const RunConfig cfg = driven_config();
  VectorSink whole;
  const RunResult full = run(cfg, whole);

  RunConfig first_half = cfg;
  first_half.t_end = 50;
  const fs::path dir = scratch("resume");
  VectorSink part;
  const RunResult r1 = run(first_half, part, {dir, "", std::nullopt});
  REQUIRE(fs::exists(r1.final_state_path));
  const RunResult r2 = resume(r1.final_state_path, json{{"run", {{"t_end", 100}}}}, part, {});
  REQUIRE(part.records.size() == whole.records.size());
  for (std::size_t i = 0; i < whole.records.size(); ++i) CHECK(part.records[i] == whole.records[i]);
  CHECK(r2.final_state.spins == full.final_state.spins);
  CHECK(r2.t_final == full.t_final);
  CHECK(r2.max_abs_g == full.max_abs_g);
}

TEST_CASE("resume with a new steering rate changes only the future") {
  const RunConfig cfg = driven_config();
  RunConfig first_half = cfg;
  first_half.t_end = 50;
  const fs::path dir = scratch("override");
  VectorSink before;
  const RunResult r1 = run(first_half, before, {dir, "", std::nullopt});

  VectorSink same, changed;
  resume(r1.final_state_path, json{{"run", {{"t_end", 60}}}}, same, {});
  resume(r1.final_state_path,
         json{{"run", {{"t_end", 60}}}, {"feedback", {{"steering", {{"fdot", -0.2}}}}}}, changed, {});
  REQUIRE(same.records.size() == changed.records.size());
  REQUIRE_FALSE(same.records.empty());
  CHECK(same.records.front().t > 50.0);
  // f is the integral of the rate from t = 0, so it differs at once; the
  // state only differs once the new drive has acted.
  CHECK(changed.records.front().f != same.records.front().f);
  CHECK(changed.records.back().mz != same.records.back().mz);

  CHECK_THROWS_AS(resume(r1.final_state_path, json{{"lattice", {{"dims", {4, 4, 4}}}}}, same, {}),
                  ConfigError);
  CHECK_THROWS_AS(resume(r1.final_state_path, json{{"lattice", {{"periodic", false}}}}, same, {}),
                  ConfigError);
}

TEST_CASE("telemetry is identical across worker counts") {
  RunConfig cfg = driven_config();
  cfg.t_end = 20;
  cfg.integrator.kernel = FieldKernelKind::direct;
  std::vector<std::string> outputs;
  for (int threads : {1, 4, 1}) {
    const fs::path dir = scratch("threads" + std::to_string(outputs.size()));
    const fs::path csv = dir / "telemetry.csv";
    {
      CsvTelemetryWriter sink(csv, false);
      run(cfg, sink, {dir, csv.string(), threads});
    }
    outputs.push_back(slurp(csv));
  }
  CHECK(outputs[0].size() > 100);
  CHECK(outputs[0] == outputs[1]);
  CHECK(outputs[0] == outputs[2]);
}

TEST_CASE("fft and dense kernels give matching runs") {
  RunConfig cfg = run_config_from_json(json::parse(R"({
    "lattice": {"dims": [4, 4, 4]}, "feedback": {"g0": 0.2, "steering": {"fdot": -0.05}},
    "run": {"t_end": 5, "seed": 3, "telemetry_interval": 1}})"));
  cfg.integrator.kernel = FieldKernelKind::direct;
  VectorSink a, b;
  run(cfg, a);
  cfg.integrator.kernel = FieldKernelKind::fft;
  run(cfg, b);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].mz == doctest::Approx(b.records[i].mz).epsilon(1e-9));
}

TEST_CASE("rotation splitting runs through the driver") {
  RunConfig cfg = driven_config();
  cfg.integrator.scheme = Scheme::rotation_splitting;
  cfg.t_end = 5;
  VectorSink sink;
  const RunResult r = run(cfg, sink);
  CHECK(max_norm_error(r.final_state.spins) <= 1e-12);
}

TEST_CASE("stop rules") {
  RunConfig cfg = driven_config();
  cfg.init.kind = InitSpec::Kind::aligned;
  cfg.init.direction = Vec3<double>(0, 0, -1);
  cfg.stop.target_sz = -0.5;
  NullSink sink;
  RunResult r = run(cfg, sink);
  CHECK(r.status == RunStatus::target_reached);
  CHECK(r.target_reached_at.value() == doctest::Approx(0.01));

  cfg = driven_config();
  cfg.feedback.g0 = Schedule::constant(0.0);
  cfg.feedback.steering.fdot = Schedule::constant(-100.0);
  cfg.stop.halt_on_tracking_lost = true;
  r = run(cfg, sink);
  CHECK(r.status == RunStatus::tracking_lost);
  REQUIRE(r.tracking_lost_at);
  // |f - M_z| passes 10 sqrt(36) = 60 once 100 t exceeds 60 - M_z.
  CHECK(*r.tracking_lost_at < 1.0);
  CHECK(r.t_final == *r.tracking_lost_at);

  cfg.stop.halt_on_tracking_lost = false;
  cfg.t_end = 2;
  r = run(cfg, sink);
  CHECK(r.status == RunStatus::completed);
  CHECK(r.tracking_lost_at);
}

TEST_CASE("numerical blow-up leaves an abort checkpoint") {
  RunConfig cfg = run_config_from_json(json::parse(R"({
    "lattice": {"dims": [2, 2, 2], "coupling_rule": "custom_table",
                "custom_table": [[0, 0, 1, 1e308, -1e308]]},
    "run": {"t_end": 1, "init": {"aligned": [1, 1, 1]}}})"));
  cfg.integrator.kernel = FieldKernelKind::direct;
  const fs::path dir = scratch("abort");
  NullSink sink;
  CHECK_THROWS_AS(run(cfg, sink, {dir, "", std::nullopt}), NumericalError);
  REQUIRE(fs::exists(dir / "abort.ckpt"));
  const Checkpoint c = read_checkpoint(dir / "abort.ckpt");
  CHECK(c.step == 0);
  CHECK(c.spins.allFinite());
}

TEST_CASE("initial state from a checkpoint") {
  RunConfig cfg = driven_config();
  cfg.t_end = 1;
  const fs::path dir = scratch("init");
  NullSink sink;
  const RunResult r1 = run(cfg, sink, {dir, "", std::nullopt});
  RunConfig next = cfg;
  next.init.kind = InitSpec::Kind::from_checkpoint;
  next.init.checkpoint_path = r1.final_state_path;
  VectorSink records;
  run(next, records);
  CHECK(records.records.front().t == 0.0);
  CHECK(records.records.front().mz == doctest::Approx(r1.final_mz).epsilon(1e-14));

  LatticeSpec other;
  other.dims = {2, 2, 2};
  next.lattice = other;
  CHECK_THROWS_AS(run(next, sink), ConfigError);
}

TEST_CASE("result serialisation") {
  RunResult r;
  r.status = RunStatus::tracking_lost;
  r.tracking_lost_at = 3.5;
  const json j = to_json(r);
  CHECK(j["status"] == "tracking_lost");
  CHECK(j["tracking_lost_at"] == 3.5);
  CHECK(j["target_reached_at"].is_null());
}
