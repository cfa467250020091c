#include "spincool/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spincool/errors.hpp"

namespace spincool {

Schedule Schedule::constant(double value) {
  Schedule s;
  s.value_ = value;
  return s;
}

Schedule Schedule::table(std::vector<Breakpoint> points) {
  if (points.empty()) throw ConfigError("schedule table needs at least one breakpoint");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].t > points[i - 1].t))
      throw ConfigError("schedule breakpoints must be strictly increasing in t");
  }
  Schedule s;
  s.value_ = points.front().value;
  s.points_ = std::move(points);
  s.cumulative_.assign(s.points_.size(), 0.0);
  for (std::size_t i = 1; i < s.points_.size(); ++i) {
    const auto& a = s.points_[i - 1];
    const auto& b = s.points_[i];
    s.cumulative_[i] = s.cumulative_[i - 1] + 0.5 * (a.value + b.value) * (b.t - a.t);
  }
  return s;
}

namespace {

double interpolate(const std::vector<Breakpoint>& pts, double t) {
  if (t <= pts.front().t) return pts.front().value;
  if (t >= pts.back().t) return pts.back().value;
  auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                             [](double x, const Breakpoint& p) { return x < p.t; });
  auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return lo->value + w * (hi->value - lo->value);
}

}  // namespace

double Schedule::operator()(double t) const {
  if (points_.empty()) return value_;
  return interpolate(points_, t);
}

double Schedule::integral(double t) const {
  if (points_.empty()) return value_ * t;
  // Antiderivative anchored at the first breakpoint.
  auto anti = [this](double x) {
    const auto& pts = points_;
    if (x <= pts.front().t) return pts.front().value * (x - pts.front().t);
    if (x >= pts.back().t) return cumulative_.back() + pts.back().value * (x - pts.back().t);
    auto hi = std::upper_bound(pts.begin(), pts.end(), x,
                               [](double v, const Breakpoint& p) { return v < p.t; });
    const std::size_t i = static_cast<std::size_t>(hi - pts.begin()) - 1;
    const double vx = interpolate(pts, x);
    return cumulative_[i] + 0.5 * (pts[i].value + vx) * (x - pts[i].t);
  };
  return anti(t) - anti(0.0);
}

double Schedule::min_value() const {
  if (points_.empty()) return value_;
  double lo = points_.front().value;
  for (const auto& p : points_) lo = std::min(lo, p.value);
  return lo;
}

std::string_view to_string(SteeringKind kind) {
  switch (kind) {
    case SteeringKind::linear: return "linear";
    case SteeringKind::stepwise: return "stepwise";
    case SteeringKind::table: return "table";
  }
  return "unknown";
}

SteeringKind steering_kind_from_string(std::string_view name) {
  if (name == "linear") return SteeringKind::linear;
  if (name == "stepwise") return SteeringKind::stepwise;
  if (name == "table") return SteeringKind::table;
  throw ConfigError("unknown steering kind '" + std::string(name) + "'");
}

void SteeringSpec::validate() const {
  if (kind == SteeringKind::stepwise && !(dt_step > 0.0))
    throw ConfigError("stepwise steering needs dt_step > 0");
  if (kind == SteeringKind::table) {
    if (table.empty()) throw ConfigError("table steering needs breakpoints");
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (!(table[i].t > table[i - 1].t))
        throw ConfigError("steering table must be strictly increasing in t");
    }
  }
}

double f_of_t(const SteeringSpec& steering, double t) {
  switch (steering.kind) {
    case SteeringKind::linear: return steering.fdot.integral(t);
    case SteeringKind::stepwise: return steering.df * std::floor(t / steering.dt_step);
    case SteeringKind::table: return interpolate(steering.table, t);
  }
  return 0.0;
}

void DetectorModel::validate() const {
  if (!(noise_sigma >= 0.0)) throw ConfigError("detector noise_sigma must be >= 0");
  if (!(hold_interval >= 0.0)) throw ConfigError("detector hold_interval must be >= 0");
}

void FeedbackConfig::validate() const {
  if (!(omega.min_value() > 0.0)) throw ConfigError("omega must be positive");
  if (!(tracking_limit > 0.0)) throw ConfigError("tracking_limit must be positive");
  steering.validate();
  detector.validate();
}

double drive_phase(const FeedbackConfig& cfg, double t) {
  return cfg.omega.is_constant() ? cfg.omega.constant_value() * t : cfg.omega.integral(t);
}

double g_of_t(const FeedbackConfig& cfg, double t, double measured_mz) {
  return cfg.g0(t) * std::cos(drive_phase(cfg, t)) * (f_of_t(cfg.steering, t) - measured_mz);
}

double Detector::measure(double true_mz, double t) {
  if (model_.ideal()) {
    state_.last_value = true_mz;
    return true_mz;
  }
  auto sample = [&] {
    return model_.noise_sigma > 0.0 ? true_mz + model_.noise_sigma * rng_.normal() : true_mz;
  };
  if (model_.hold_interval == 0.0) {
    state_.last_value = sample();
    return state_.last_value;
  }
  const auto k = static_cast<std::int64_t>(std::floor(t / model_.hold_interval));
  if (k != state_.held_index) {
    state_.held_index = k;
    state_.held_value = sample();
  }
  state_.last_value = state_.held_value;
  return state_.held_value;
}

Detector::State Detector::state() const {
  State s = state_;
  s.rng_state = rng_.state();
  return s;
}

void Detector::restore(const State& s) {
  state_ = s;
  rng_.set_state(s.rng_state);
}

}  // namespace spincool
