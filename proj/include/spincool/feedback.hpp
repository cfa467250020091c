#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "spincool/rng.hpp"

namespace spincool {

/// (t, value) breakpoint of a piecewise-linear schedule or steering table.
struct Breakpoint {
  double t = 0.0;
  double value = 0.0;

  bool operator==(const Breakpoint&) const = default;
};

/// A real parameter as a function of time: either a constant or a
/// piecewise-linear table, held constant beyond its first and last
/// breakpoints. `integral(t)` is exact for both forms.
class Schedule {
 public:
  Schedule() = default;
  static Schedule constant(double value);
  /// Throws ConfigError unless breakpoints are non-empty and strictly
  /// increasing in t.
  static Schedule table(std::vector<Breakpoint> points);

  double operator()(double t) const;
  double integral(double t) const;  // from 0 to t, t >= 0

  bool is_constant() const { return points_.empty(); }
  double constant_value() const { return value_; }
  const std::vector<Breakpoint>& points() const { return points_; }
  double min_value() const;

  bool operator==(const Schedule&) const = default;

 private:
  double value_ = 0.0;
  std::vector<Breakpoint> points_;
  std::vector<double> cumulative_;  // integral from points_[0].t to points_[i].t
};

enum class SteeringKind { linear, stepwise, table };

std::string_view to_string(SteeringKind kind);
SteeringKind steering_kind_from_string(std::string_view name);

struct SteeringSpec {
  SteeringKind kind = SteeringKind::linear;
  Schedule fdot = Schedule::constant(-0.005);  // linear: f(t) = integral of fdot
  double dt_step = 1.0;                        // stepwise
  double df = 0.0;                             // stepwise
  std::vector<Breakpoint> table;               // table: f breakpoints

  void validate() const;
  bool operator==(const SteeringSpec&) const = default;
};

/// Steering function f(t). Tables interpolate linearly and clamp outside
/// their range.
double f_of_t(const SteeringSpec& steering, double t);

struct DetectorModel {
  double noise_sigma = 0.0;
  double hold_interval = 0.0;  // 0 = continuous sampling

  bool ideal() const { return noise_sigma == 0.0 && hold_interval == 0.0; }
  void validate() const;
  bool operator==(const DetectorModel&) const = default;
};

struct FeedbackConfig {
  Schedule g0 = Schedule::constant(0.2);
  Schedule omega = Schedule::constant(7.0);
  SteeringSpec steering;
  double hz = 0.0;
  DetectorModel detector;
  double tracking_limit = 10.0;  // tracking lost once |f - M_z| > limit * sqrt(N)

  void validate() const;
  bool operator==(const FeedbackConfig&) const = default;
};

/// Drive phase: omega * t for constant omega, the integral of omega otherwise.
double drive_phase(const FeedbackConfig& cfg, double t);

/// g(t) = g0(t) cos(phase(t)) [f(t) - measured_mz].
double g_of_t(const FeedbackConfig& cfg, double t, double measured_mz);

/// Stateful M_z measurement. Ideal: returns the true value. Otherwise the
/// value is refreshed (true M_z plus Gaussian noise) once per hold interval
/// k = floor(t / hold_interval), or at every call when hold_interval is 0.
class Detector {
 public:
  struct State {
    std::uint64_t rng_state = 0;
    std::int64_t held_index = -1;
    double held_value = 0.0;
    double last_value = 0.0;
  };

  Detector() = default;
  Detector(const DetectorModel& model, SplitMix64 rng) : model_(model), rng_(rng) {}

  double measure(double true_mz, double t);

  /// Most recent measurement; does not consume randomness.
  double last() const { return state_.last_value; }
  const DetectorModel& model() const { return model_; }

  State state() const;
  void restore(const State& s);

 private:
  DetectorModel model_;
  SplitMix64 rng_;
  State state_;
};

/// One measurement through a detector (see Detector::measure).
inline double measured_mz(Detector& detector, double true_mz, double t) {
  return detector.measure(true_mz, t);
}

}  // namespace spincool
