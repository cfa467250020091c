#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>

#include "json.hpp"
#include "spincool/checkpoint.hpp"
#include "spincool/config.hpp"
#include "spincool/dynamics.hpp"
#include "spincool/rng.hpp"
#include "spincool/telemetry.hpp"

namespace spincool {

/// Each spin uniform on the unit sphere: z uniform in [-1, 1], azimuth
/// uniform in [0, 2 pi). Two uniforms per spin, z first.
template <typename Scalar>
SpinState<Scalar> sample_infinite_temperature(int n, SplitMix64& rng) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  SpinState<Scalar> state;
  state.spins.resize(n, 3);
  for (int m = 0; m < n; ++m) {
    const Scalar z = Scalar(rng.uniform(-1.0, 1.0));
    const Scalar phi = Scalar(rng.uniform(0.0, 2.0 * std::numbers::pi));
    const Scalar r = sqrt(std::max(Scalar(0), Scalar(1) - z * z));
    state.spins(m, 0) = r * cos(phi);
    state.spins(m, 1) = r * sin(phi);
    state.spins(m, 2) = z;
  }
  return state;
}

/// Stream ids derived from the run seed.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kDetectorStream = 1;

enum class RunStatus { completed, target_reached, tracking_lost };

std::string_view to_string(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::completed;
  std::string final_state_path;  // empty when no output directory was given
  std::string telemetry_path;
  double t_final = 0.0;
  std::int64_t steps = 0;
  double final_mz = 0.0;
  double final_sz = 0.0;  // M_z / N
  double max_abs_g = 0.0;
  double max_abs_g_tracking = 0.0;
  double max_tracking_error = 0.0;
  std::optional<double> tracking_lost_at;
  std::optional<double> target_reached_at;
  double wall_time = 0.0;
  SpinState<double> final_state;
};

nlohmann::json to_json(const RunResult& result);

struct RunOptions {
  /// Checkpoints (final.ckpt, periodic checkpoint.ckpt, abort.ckpt on a
  /// numerical failure) go here; empty disables them.
  std::filesystem::path out_dir;
  std::string telemetry_path;  // reported in RunResult only
  /// Overrides integrator.threads when set (does not change results).
  std::optional<int> threads;
};

/// Integrate-measure-drive loop from the configured initial state until
/// t_end or a stop rule fires. Deterministic in (config, seed). Throws
/// ConfigError, NumericalError (after writing abort.ckpt) or IoError.
RunResult run(const RunConfig& config, TelemetrySink& sink, const RunOptions& options = {});

/// Continues a checkpointed run. `overrides` is a JSON merge patch applied
/// to the stored config; with no overrides the continuation is bit-identical
/// to an uninterrupted run. The lattice may not change.
RunResult resume(const std::filesystem::path& checkpoint, const nlohmann::json& overrides,
                 TelemetrySink& sink, const RunOptions& options = {});

}  // namespace spincool
