#include "spincool/experiment.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <variant>

#include "spincool/errors.hpp"
#include "spincool/fft_kernel.hpp"
#include "spincool/lattice.hpp"
#include "spincool/observables.hpp"

namespace spincool {

using nlohmann::json;

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::target_reached: return "target_reached";
    case RunStatus::tracking_lost: return "tracking_lost";
  }
  return "unknown";
}

json to_json(const RunResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"status", to_string(r.status)},
              {"final_state_path", r.final_state_path},
              {"telemetry_path", r.telemetry_path},
              {"t_final", r.t_final},
              {"steps", r.steps},
              {"final_mz", r.final_mz},
              {"final_sz", r.final_sz},
              {"max_abs_g", r.max_abs_g},
              {"max_abs_g_tracking", r.max_abs_g_tracking},
              {"max_tracking_error", r.max_tracking_error},
              {"tracking_lost_at", opt(r.tracking_lost_at)},
              {"target_reached_at", opt(r.target_reached_at)},
              {"wall_time", r.wall_time}};
}

namespace {

constexpr double kFftSelfTestTolerance = 1e-10;
constexpr int kFftMinSites = 512;

using Kernel = std::variant<DirectFieldKernel<double>, FftFieldKernel>;

Kernel make_kernel(const IntegratorConfig& cfg, const CouplingTable<double>& table, int threads) {
  FieldKernelKind kind = cfg.kernel;
  if (kind == FieldKernelKind::automatic) {
    kind = cfg.scheme == Scheme::rk4_renorm && table.n_sites() >= kFftMinSites ? FieldKernelKind::fft
                                                                               : FieldKernelKind::direct;
  }
  if (kind == FieldKernelKind::fft) {
    FftFieldKernel fft(table);
    const double deviation = fft_self_test(fft, table);
    if (!(deviation <= kFftSelfTestTolerance))
      throw NumericalError("FFT field kernel disagrees with direct sums (max deviation " +
                           format_double(deviation) + ")");
    return Kernel(std::in_place_type<FftFieldKernel>, std::move(fft));
  }
  return Kernel(std::in_place_type<DirectFieldKernel<double>>, table, threads);
}

class Simulation {
 public:
  Simulation(RunConfig cfg, int threads)
      : cfg_(std::move(cfg)),
        table_(build_couplings<double>(cfg_.lattice, cfg_.custom_couplings)),
        kernel_(make_kernel(cfg_.integrator, table_, threads)),
        detector_(cfg_.feedback.detector, SplitMix64::derive(cfg_.seed, kDetectorStream)) {}

  void initialise() {
    const int n = table_.n_sites();
    switch (cfg_.init.kind) {
      case InitSpec::Kind::infinite_temperature: {
        auto rng = SplitMix64::derive(cfg_.seed, kInitStream);
        state_ = sample_infinite_temperature<double>(n, rng);
        break;
      }
      case InitSpec::Kind::aligned:
        state_.spins = cfg_.init.direction.normalized().transpose().replicate(n, 1);
        break;
      case InitSpec::Kind::from_checkpoint: {
        auto ckpt = read_checkpoint(cfg_.init.checkpoint_path);
        if (ckpt.spins.rows() != n)
          throw ConfigError("init checkpoint has " + std::to_string(ckpt.spins.rows()) +
                            " spins, lattice has " + std::to_string(n));
        state_.spins = std::move(ckpt.spins);
        break;
      }
    }
    state_.t = 0.0;
    step_ = 0;
    origin_t_ = 0.0;
    origin_step_ = 0;
  }

  void restore(const Checkpoint& ckpt, double stored_dt) {
    if (ckpt.spins.rows() != table_.n_sites()) throw ConfigError("checkpoint does not match lattice");
    state_.spins = ckpt.spins;
    state_.t = ckpt.t;
    step_ = ckpt.step;
    if (cfg_.integrator.dt == stored_dt) {
      origin_t_ = ckpt.origin_t;
      origin_step_ = ckpt.origin_step;
    } else {
      origin_t_ = ckpt.t;
      origin_step_ = ckpt.step;
    }
    detector_.restore(ckpt.detector);
    stats_ = ckpt.stats;
  }

  RunResult execute(TelemetrySink& sink, const RunOptions& options, bool emit_initial) {
    const auto wall_start = std::chrono::steady_clock::now();
    const auto& fb = cfg_.feedback;
    const double dt = cfg_.integrator.dt;
    const int n = table_.n_sites();
    const double tracking_threshold = fb.tracking_limit * std::sqrt(static_cast<double>(n));
    const std::int64_t end_step = origin_step_ + std::llround((cfg_.t_end - origin_t_) / dt);
    const std::int64_t telemetry_stride =
        std::max<std::int64_t>(1, std::llround(cfg_.resolved_telemetry_interval() / dt));
    const std::int64_t checkpoint_stride =
        std::max<std::int64_t>(1, std::llround(cfg_.checkpoint_interval / dt));

    auto drive = [&](double t, double mz) {
      const double g = g_of_t(fb, t, detector_.measure(mz, t));
      stats_.max_abs_g = std::max(stats_.max_abs_g, std::abs(g));
      if (!stats_.tracking_lost_at) stats_.max_abs_g_tracking = std::max(stats_.max_abs_g_tracking, std::abs(g));
      return g;
    };

    RunResult result;
    if (emit_initial) {
      note_tracking(tracking_threshold);
      sink.consume(record());
    }

    while (step_ < end_step) {
      // The failed step may have fed non-finite stage values to the detector
      // and stats, so the abort checkpoint rolls both back.
      const Detector::State detector_before = detector_.state();
      const RunStats stats_before = stats_;
      try {
        advance(drive);
      } catch (const NumericalError&) {
        detector_.restore(detector_before);
        stats_ = stats_before;
        if (!options.out_dir.empty()) write_checkpoint(options.out_dir / "abort.ckpt", snapshot());
        throw;
      }
      ++step_;
      state_.t = clock(step_);

      const bool lost_now = note_tracking(tracking_threshold);
      if ((step_ - origin_step_) % telemetry_stride == 0) sink.consume(record());
      if (!options.out_dir.empty() && step_ % checkpoint_stride == 0)
        write_checkpoint(options.out_dir / "checkpoint.ckpt", snapshot());

      if (lost_now && cfg_.stop.halt_on_tracking_lost) {
        result.status = RunStatus::tracking_lost;
        break;
      }
      if (cfg_.stop.target_sz) {
        const double sz = state_.spins.col(2).sum() / n;
        const double target = *cfg_.stop.target_sz;
        if (target < 0.0 ? sz <= target : sz >= target) {
          result.status = RunStatus::target_reached;
          result.target_reached_at = state_.t;
          break;
        }
      }
    }
    sink.finish();

    if (!options.out_dir.empty()) {
      const auto path = options.out_dir / "final.ckpt";
      write_checkpoint(path, snapshot());
      result.final_state_path = path.string();
    }
    result.telemetry_path = options.telemetry_path;
    result.t_final = state_.t;
    result.steps = step_;
    result.final_mz = state_.spins.col(2).sum();
    result.final_sz = result.final_mz / n;
    result.max_abs_g = stats_.max_abs_g;
    result.max_abs_g_tracking = stats_.max_abs_g_tracking;
    result.max_tracking_error = stats_.max_tracking_error;
    result.tracking_lost_at = stats_.tracking_lost_at;
    result.final_state = state_;
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
  }

  const RunConfig& config() const { return cfg_; }

 private:
  double clock(std::int64_t step) const {
    return origin_t_ + static_cast<double>(step - origin_step_) * cfg_.integrator.dt;
  }

  template <typename Drive>
  void advance(Drive& drive) {
    const double hz = cfg_.feedback.hz;
    std::visit(
        [&](auto& kernel) {
          using K = std::decay_t<decltype(kernel)>;
          if constexpr (std::is_same_v<K, DirectFieldKernel<double>>) {
            step(state_, cfg_.integrator, kernel, drive, hz, ws_);
          } else {
            auto fields = [&](double t, const SpinArray<double>& s, FieldArray<double>& h) {
              kernel.interaction_fields(s, h);
              add_drive(h, drive(t, s.col(2).sum()), hz);
            };
            step(state_, cfg_.integrator, fields, ws_);
          }
        },
        kernel_);
  }

  // Returns true when tracking is lost at this step for the first time.
  bool note_tracking(double threshold) {
    const double err = std::abs(f_of_t(cfg_.feedback.steering, state_.t) - state_.spins.col(2).sum());
    stats_.max_tracking_error = std::max(stats_.max_tracking_error, err);
    if (err > threshold && !stats_.tracking_lost_at) {
      stats_.tracking_lost_at = state_.t;
      return true;
    }
    return false;
  }

  // g is reported from the last measurement so that telemetry never draws
  // detector randomness.
  TelemetryRecord record() {
    const Vec3<double> m = collective(state_);
    std::visit([&](auto& kernel) { kernel.interaction_fields(state_.spins, telemetry_h_); }, kernel_);
    const auto& fb = cfg_.feedback;
    const double measured = fb.detector.ideal() ? m.z() : detector_.last();
    return {state_.t,
            m.x(),
            m.y(),
            m.z(),
            f_of_t(fb.steering, state_.t),
            g_of_t(fb, state_.t, measured),
            energy_from_fields(state_.spins, telemetry_h_, fb.hz)};
  }

  Checkpoint snapshot() const {
    Checkpoint c;
    c.config = to_json(cfg_);
    c.seed = cfg_.seed;
    c.step = step_;
    c.t = state_.t;
    c.origin_t = origin_t_;
    c.origin_step = origin_step_;
    c.detector = detector_.state();
    c.stats = stats_;
    c.spins = state_.spins;
    return c;
  }

  RunConfig cfg_;
  CouplingTable<double> table_;
  Kernel kernel_;
  Detector detector_;
  SpinState<double> state_;
  std::int64_t step_ = 0;
  double origin_t_ = 0.0;
  std::int64_t origin_step_ = 0;
  RunStats stats_;
  StepWorkspace<double> ws_;
  FieldArray<double> telemetry_h_;
};

int resolve_threads(const RunConfig& cfg, const RunOptions& options) {
  const int requested = options.threads.value_or(cfg.integrator.threads);
  return requested == 0 ? omp_get_max_threads() : requested;
}

}  // namespace

RunResult run(const RunConfig& config, TelemetrySink& sink, const RunOptions& options) {
  config.validate();
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
  Simulation sim(config, resolve_threads(config, options));
  sim.initialise();
  return sim.execute(sink, options, /*emit_initial=*/true);
}

RunResult resume(const std::filesystem::path& checkpoint, const json& overrides, TelemetrySink& sink,
                 const RunOptions& options) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const RunConfig stored = run_config_from_json(ckpt.config);
  json merged = ckpt.config;
  if (!overrides.is_null()) merged.merge_patch(overrides);
  RunConfig cfg = run_config_from_json(merged);
  if (!(cfg.lattice == stored.lattice) || cfg.custom_couplings.size() != stored.custom_couplings.size())
    throw ConfigError("resume overrides may not change the lattice (checkpoint spec mismatch)");
  if (ckpt.spins.rows() != cfg.lattice.n_sites())
    throw ConfigError("checkpoint holds " + std::to_string(ckpt.spins.rows()) + " spins, lattice has " +
                      std::to_string(cfg.lattice.n_sites()));
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
  Simulation sim(cfg, resolve_threads(cfg, options));
  sim.restore(ckpt, stored.integrator.dt);
  return sim.execute(sink, options, /*emit_initial=*/false);
}

}  // namespace spincool
