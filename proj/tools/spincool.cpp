// spincool: command-line front end for feedback-cooling runs.
//
// Exit codes: 0 success, 2 config error, 3 numerical abort, 4 tracking lost
// (halt_on_tracking_lost), 5 I/O failure, 1 anything else.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "spincool/config.hpp"
#include "spincool/errors.hpp"
#include "spincool/experiment.hpp"
#include "spincool/lattice.hpp"
#include "spincool/observables.hpp"
#include "spincool/telemetry.hpp"

namespace {

using nlohmann::json;
using namespace spincool;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitTrackingLost = 4;
constexpr int kExitIo = 5;

std::array<int, 3> parse_dims(const std::string& text) {
  static const std::regex pattern(R"(^\s*(\d+)\s*[xX,]\s*(\d+)\s*[xX,]\s*(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw ConfigError("--dims expects LxLyLz, e.g. 10x10x10");
  return {std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
}

int finish_run(const RunResult& result, const std::filesystem::path& out_dir) {
  const json doc = to_json(result);
  std::ofstream(out_dir / "result.json") << doc.dump(2) << "\n";
  std::cout << doc.dump(2) << std::endl;
  return result.status == RunStatus::tracking_lost ? kExitTrackingLost : 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
            std::optional<int> threads, std::optional<double> t_end) {
  RunConfig cfg = load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (t_end) cfg.t_end = *t_end;
  const std::filesystem::path out_dir(out);
  std::filesystem::create_directories(out_dir);
  const auto telemetry = out_dir / "telemetry.csv";
  CsvTelemetryWriter sink(telemetry, /*append=*/false);
  RunOptions options{out_dir, telemetry.string(), threads};
  return finish_run(run(cfg, sink, options), out_dir);
}

int cmd_resume(const std::string& ckpt, const std::string& out, const std::string& overrides_path,
               std::optional<double> t_end, std::optional<int> threads) {
  json overrides = json::object();
  if (!overrides_path.empty()) {
    std::ifstream in(overrides_path);
    if (!in) throw IoError("cannot open overrides " + overrides_path);
    try {
      overrides = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("overrides are not valid JSON: ") + e.what());
    }
  }
  if (t_end) overrides["run"]["t_end"] = *t_end;
  const std::filesystem::path out_dir =
      out.empty() ? std::filesystem::path(ckpt).parent_path() : std::filesystem::path(out);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const auto telemetry = out_dir / "telemetry.csv";
  CsvTelemetryWriter sink(telemetry, /*append=*/true);
  RunOptions options{out_dir, telemetry.string(), threads};
  return finish_run(resume(ckpt, overrides, sink, options), out_dir);
}

struct CheckArgs {
  std::string config;
  std::optional<int> n;
  std::optional<double> mz, sigma_my, fdot, omega, g0, t2;
};

int cmd_check(const CheckArgs& a) {
  int n = 0;
  double fdot = 0.0, omega = 0.0, g0 = 0.0;
  bool have_params = false;
  if (!a.config.empty()) {
    const RunConfig cfg = load_run_config(a.config);
    n = cfg.lattice.n_sites();
    fdot = cfg.feedback.steering.fdot(0.0);
    omega = cfg.feedback.omega(0.0);
    g0 = cfg.feedback.g0(0.0);
    have_params = true;
  }
  if (a.n) n = *a.n;
  if (a.fdot) fdot = *a.fdot;
  if (a.omega) omega = *a.omega;
  if (a.g0) g0 = *a.g0;
  if (!have_params && !(a.n && a.fdot && a.omega && a.g0))
    throw ConfigError("check needs --config or all of --n, --fdot, --omega, --g0");
  if (!a.t2) throw ConfigError("check needs --t2");
  const double sigma = a.sigma_my.value_or(analytic_sigma_my(n));
  const double mz = a.mz.value_or(0.0);
  const ConditionReport r = check_conditions(n, mz, sigma, fdot, omega, g0, *a.t2);
  const json doc{{"inputs",
                  {{"n_spins", n}, {"mz", mz}, {"sigma_my", sigma}, {"fdot", fdot}, {"omega", omega},
                   {"g0", g0}, {"t2", *a.t2}}},
                 {"delta_t", r.delta_t},
                 {"delta_f", r.delta_f},
                 {"fluct_gain", r.fluct_gain},
                 {"cond_i", r.cond_i},
                 {"ratio_ii", r.ratio_ii},
                 {"cond_ii", r.cond_ii},
                 {"rho_iii", r.rho_iii},
                 {"cond_iii", r.cond_iii},
                 {"delta_phi", r.delta_phi},
                 {"small_angle", r.small_angle},
                 {"all", r.all()},
                 {"notes", r.notes}};
  std::cout << doc.dump(2) << std::endl;
  return 0;
}

int cmd_estimate_t2(const std::string& file, const std::string& method_name) {
  const auto records = read_telemetry_csv(file);
  std::vector<double> t, my;
  t.reserve(records.size());
  my.reserve(records.size());
  for (const auto& r : records) {
    t.push_back(r.t);
    my.push_back(r.my);
  }
  const T2Method method = t2_method_from_string(method_name);
  const double t2 = estimate_t2(t, my, method);
  std::cout << json{{"t2", t2}, {"method", to_string(method)}, {"samples", records.size()}}.dump(2)
            << std::endl;
  return 0;
}

int cmd_dump_couplings(const std::string& dims, bool open, const std::string& image,
                       const std::string& out) {
  LatticeSpec spec;
  spec.dims = parse_dims(dims);
  spec.periodic = !open;
  spec.image_convention = image_convention_from_string(image);
  const auto table = build_couplings<double>(spec);
  if (out.empty()) {
    write_coupling_csv(std::cout, table);
  } else {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out);
    write_coupling_csv(f, table);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spincool - feedback cooling of classical spin lattices"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "spincool_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> t_end;
  auto* run_cmd = app.add_subcommand("run", "Run a simulation from a JSON config");
  run_cmd->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override run.seed");
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--threads", threads, "Worker threads for field evaluation (0 = all)");
  run_cmd->add_option("--t-end", t_end, "Override run.t_end");

  std::string ckpt_path, resume_out, overrides_path;
  std::optional<int> resume_threads;
  std::optional<double> resume_t_end;
  auto* resume_cmd = app.add_subcommand("resume", "Continue a run from a checkpoint");
  resume_cmd->add_option("checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  resume_cmd->add_option("--out", resume_out, "Output directory (default: checkpoint directory)");
  resume_cmd->add_option("--overrides", overrides_path, "JSON merge patch applied to the stored config");
  resume_cmd->add_option("--t-end", resume_t_end, "New end time");
  resume_cmd->add_option("--threads", resume_threads, "Worker threads for field evaluation");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Evaluate the feasibility conditions");
  check_cmd->add_option("--config", check.config, "Take N, fdot, omega, g0 from a run config");
  check_cmd->add_option("--n", check.n, "Number of spins");
  check_cmd->add_option("--mz", check.mz, "Current polarisation M_z (default 0)");
  check_cmd->add_option("--sigma-my", check.sigma_my, "Transverse fluctuation (default sqrt(N/3))");
  check_cmd->add_option("--fdot", check.fdot, "Steering rate");
  check_cmd->add_option("--omega", check.omega, "Drive angular frequency");
  check_cmd->add_option("--g0", check.g0, "Drive amplitude prefactor");
  check_cmd->add_option("--t2", check.t2, "Transverse correlation time");

  std::string t2_file, t2_method = "one_over_e";
  auto* t2_cmd = app.add_subcommand("estimate-t2", "Estimate T2 from the my column of a telemetry CSV");
  t2_cmd->add_option("file", t2_file, "Telemetry CSV")->required()->check(CLI::ExistingFile);
  t2_cmd->add_option("--method", t2_method, "one_over_e or integral")->capture_default_str();

  std::string dims, image = "minimum_image_split", dump_out;
  bool open = false;
  auto* dump_cmd = app.add_subcommand("dump-couplings", "Print the coupling table as CSV");
  dump_cmd->add_option("--dims", dims, "Lattice dimensions LxLyLz")->required();
  dump_cmd->add_flag("--open", open, "Open (non-periodic) boundaries");
  dump_cmd->add_option("--image", image, "minimum_image_split or minimum_image_drop")->capture_default_str();
  dump_cmd->add_option("--out", dump_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, seed, out_dir, threads, t_end);
    if (*resume_cmd) return cmd_resume(ckpt_path, resume_out, overrides_path, resume_t_end, resume_threads);
    if (*check_cmd) return cmd_check(check);
    if (*t2_cmd) return cmd_estimate_t2(t2_file, t2_method);
    if (*dump_cmd) return cmd_dump_couplings(dims, open, image, dump_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
