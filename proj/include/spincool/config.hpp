#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincool/dynamics.hpp"
#include "spincool/feedback.hpp"
#include "spincool/lattice.hpp"

namespace spincool {

struct InitSpec {
  enum class Kind { infinite_temperature, aligned, from_checkpoint };
  Kind kind = Kind::infinite_temperature;
  Vec3<double> direction{0.0, 0.0, 1.0};
  std::string checkpoint_path;

  bool operator==(const InitSpec&) const = default;
};

struct StopRules {
  std::optional<double> target_sz;  // stop once M_z / N reaches it (sign-aware)
  bool halt_on_tracking_lost = false;

  bool operator==(const StopRules&) const = default;
};

struct RunConfig {
  LatticeSpec lattice;
  std::vector<CustomCoupling> custom_couplings;
  IntegratorConfig integrator;
  FeedbackConfig feedback;
  double t_end = 0.0;
  std::optional<double> telemetry_interval;  // default: one drive period 2 pi / omega(0)
  std::uint64_t seed = 0;
  InitSpec init;
  StopRules stop;
  double checkpoint_interval = 1000.0;

  double resolved_telemetry_interval() const;
  void validate() const;
};

/// JSON document with sections lattice / integrator / feedback / run. Every
/// field is optional except lattice.dims and run.t_end. Schedules are a
/// number, {"table": [[t, v], ...]} or {"csv": "file"} (columns t,value);
/// relative file names resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const LatticeSpec& spec);

/// CSV with header dx,dy,dz,jz,jperp. Lines starting with '#' are skipped.
std::vector<CustomCoupling> read_coupling_csv(const std::filesystem::path& path);

/// One row per displacement class, preceded by a '#'-prefixed single-line
/// JSON header describing the lattice.
void write_coupling_csv(std::ostream& out, const CouplingTable<double>& table);

/// Two-column CSV (t,value) as breakpoints.
std::vector<Breakpoint> read_breakpoint_csv(const std::filesystem::path& path);

/// Formats with 17 significant digits (round-trip exact for doubles).
std::string format_double(double v);

}  // namespace spincool
