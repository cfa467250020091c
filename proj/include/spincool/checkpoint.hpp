#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "spincool/feedback.hpp"
#include "spincool/types.hpp"

namespace spincool {

/// Running extrema of a run, carried across checkpoints.
struct RunStats {
  double max_abs_g = 0.0;
  double max_abs_g_tracking = 0.0;  // before tracking was lost
  double max_tracking_error = 0.0;  // max |f - M_z|
  std::optional<double> tracking_lost_at;

  bool operator==(const RunStats&) const = default;
};

/// On disk: one line of JSON (the header) terminated by '\n', followed by
/// N x 3 little-endian IEEE-754 doubles, site-major (x, y, z per site).
/// Time is t = origin_t + (step - origin_step) * dt.
struct Checkpoint {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  double t = 0.0;
  double origin_t = 0.0;
  std::int64_t origin_step = 0;
  Detector::State detector;
  RunStats stats;
  SpinArray<double> spins;
};

inline constexpr const char* kCheckpointFormat = "spincool-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Writes to a temporary sibling and renames, so a reader never sees a
/// partial file.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace spincool
