#include "spincool/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "spincool/errors.hpp"

namespace spincool {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double RunConfig::resolved_telemetry_interval() const {
  if (telemetry_interval) return *telemetry_interval;
  return 2.0 * std::numbers::pi / feedback.omega(0.0);
}

void RunConfig::validate() const {
  lattice.validate();
  if (lattice.coupling_rule == CouplingRule::custom_table && custom_couplings.empty())
    throw ConfigError("custom_table coupling rule requires lattice.custom_table");
  integrator.validate();
  feedback.validate();
  if (!(t_end > 0.0)) throw ConfigError("run.t_end must be positive");
  if (!(resolved_telemetry_interval() >= integrator.dt))
    throw ConfigError("run.telemetry_interval must be >= integrator.dt");
  if (!(checkpoint_interval > 0.0)) throw ConfigError("run.checkpoint_interval must be positive");
  if (init.kind == InitSpec::Kind::aligned && init.direction.norm() == 0.0)
    throw ConfigError("aligned init needs a non-zero direction");
  if (init.kind == InitSpec::Kind::from_checkpoint && init.checkpoint_path.empty())
    throw ConfigError("from_checkpoint init needs a path");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("bad number '" + s + "' in " + path.string());
  return v;
}

// Reads a headed CSV, returning rows in header order for the requested
// columns.
std::vector<std::vector<double>> read_columns(const std::filesystem::path& path,
                                              const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::vector<int> index;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto cells = split_csv_line(line);
    if (index.empty()) {
      for (const auto& c : columns) {
        auto it = std::find(cells.begin(), cells.end(), c);
        if (it == cells.end()) throw ConfigError(path.string() + " lacks column '" + c + "'");
        index.push_back(static_cast<int>(it - cells.begin()));
      }
      continue;
    }
    std::vector<double> row;
    for (int i : index) {
      if (i >= static_cast<int>(cells.size())) throw ConfigError("short row in " + path.string());
      row.push_back(parse_number(cells[i], path));
    }
    rows.push_back(std::move(row));
  }
  if (index.empty()) throw ConfigError(path.string() + " has no header row");
  return rows;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const char* section) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + section);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& name) {
  std::filesystem::path p(name);
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<Breakpoint> breakpoints_from_json(const json& j, const std::filesystem::path& base) {
  if (j.is_string()) return read_breakpoint_csv(resolve(base, j.get<std::string>()));
  if (!j.is_array()) throw ConfigError("breakpoint table must be an array or CSV file name");
  std::vector<Breakpoint> pts;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != 2) throw ConfigError("breakpoints are [t, value] pairs");
    pts.push_back({row[0].get<double>(), row[1].get<double>()});
  }
  return pts;
}

Schedule schedule_from_json(const json& j, const std::filesystem::path& base) {
  if (j.is_number()) return Schedule::constant(j.get<double>());
  if (j.is_object()) {
    if (j.contains("table")) return Schedule::table(breakpoints_from_json(j.at("table"), base));
    if (j.contains("csv"))
      return Schedule::table(read_breakpoint_csv(resolve(base, j.at("csv").get<std::string>())));
  }
  throw ConfigError("schedule must be a number, {\"table\": ...} or {\"csv\": ...}");
}

json breakpoints_to_json(const std::vector<Breakpoint>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.t, p.value});
  return arr;
}

json schedule_to_json(const Schedule& s) {
  if (s.is_constant()) return s.constant_value();
  return json{{"table", breakpoints_to_json(s.points())}};
}

std::vector<CustomCoupling> couplings_from_json(const json& j, const std::filesystem::path& base) {
  if (j.is_string()) return read_coupling_csv(resolve(base, j.get<std::string>()));
  if (!j.is_array()) throw ConfigError("custom_table must be an array or CSV file name");
  std::vector<CustomCoupling> out;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != 5)
      throw ConfigError("custom_table rows are [dx, dy, dz, jz, jperp]");
    out.push_back({Index3(row[0].get<int>(), row[1].get<int>(), row[2].get<int>()),
                   row[3].get<double>(), row[4].get<double>()});
  }
  return out;
}

}  // namespace

std::vector<Breakpoint> read_breakpoint_csv(const std::filesystem::path& path) {
  std::vector<Breakpoint> pts;
  for (const auto& row : read_columns(path, {"t", "value"})) pts.push_back({row[0], row[1]});
  return pts;
}

std::vector<CustomCoupling> read_coupling_csv(const std::filesystem::path& path) {
  std::vector<CustomCoupling> out;
  for (const auto& row : read_columns(path, {"dx", "dy", "dz", "jz", "jperp"})) {
    out.push_back({Index3(static_cast<int>(row[0]), static_cast<int>(row[1]), static_cast<int>(row[2])),
                   row[3], row[4]});
  }
  return out;
}

json to_json(const LatticeSpec& spec) {
  return json{{"dims", spec.dims},
              {"periodic", spec.periodic},
              {"coupling_rule", to_string(spec.coupling_rule)},
              {"image_convention", to_string(spec.image_convention)}};
}

void write_coupling_csv(std::ostream& out, const CouplingTable<double>& table) {
  out << "# " << json{{"lattice", to_json(table.spec())}, {"classes", table.classes().size()}}.dump()
      << "\n";
  out << "dx,dy,dz,jz,jperp\n";
  for (const Index3& d : table.classes()) {
    out << d.x() << ',' << d.y() << ',' << d.z() << ',' << format_double(table.jz(d)) << ','
        << format_double(table.jperp(d)) << '\n';
  }
}

RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base) {
  reject_unknown(doc, {"lattice", "integrator", "feedback", "run"}, "config");
  RunConfig cfg;
  try {
    if (!doc.contains("lattice") || !doc.at("lattice").contains("dims"))
      throw ConfigError("lattice.dims is required");
    const json& lat = doc.at("lattice");
    reject_unknown(lat, {"dims", "periodic", "coupling_rule", "image_convention", "custom_table"},
                   "lattice");
    const json& dims = lat.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw ConfigError("lattice.dims must be [Lx, Ly, Lz]");
    for (int a = 0; a < 3; ++a) cfg.lattice.dims[a] = dims[a].get<int>();
    cfg.lattice.periodic = get_or(lat, "periodic", true);
    cfg.lattice.coupling_rule =
        coupling_rule_from_string(get_or<std::string>(lat, "coupling_rule", "dipolar_truncated"));
    cfg.lattice.image_convention = image_convention_from_string(
        get_or<std::string>(lat, "image_convention", "minimum_image_split"));
    if (lat.contains("custom_table")) cfg.custom_couplings = couplings_from_json(lat.at("custom_table"), base);

    if (doc.contains("integrator")) {
      const json& in = doc.at("integrator");
      reject_unknown(in, {"scheme", "dt", "kernel", "threads"}, "integrator");
      cfg.integrator.scheme = scheme_from_string(get_or<std::string>(in, "scheme", "rk4_renorm"));
      cfg.integrator.dt = get_or(in, "dt", 0.01);
      cfg.integrator.kernel = field_kernel_from_string(get_or<std::string>(in, "kernel", "auto"));
      cfg.integrator.threads = get_or(in, "threads", 1);
    }

    if (doc.contains("feedback")) {
      const json& fb = doc.at("feedback");
      reject_unknown(fb, {"g0", "omega", "steering", "hz", "detector", "tracking_limit"}, "feedback");
      if (fb.contains("g0")) cfg.feedback.g0 = schedule_from_json(fb.at("g0"), base);
      if (fb.contains("omega")) cfg.feedback.omega = schedule_from_json(fb.at("omega"), base);
      cfg.feedback.hz = get_or(fb, "hz", 0.0);
      cfg.feedback.tracking_limit = get_or(fb, "tracking_limit", 10.0);
      if (fb.contains("steering")) {
        const json& st = fb.at("steering");
        reject_unknown(st, {"kind", "fdot", "dt_step", "df", "table"}, "feedback.steering");
        auto& s = cfg.feedback.steering;
        s.kind = steering_kind_from_string(get_or<std::string>(st, "kind", "linear"));
        if (st.contains("fdot")) s.fdot = schedule_from_json(st.at("fdot"), base);
        s.dt_step = get_or(st, "dt_step", 1.0);
        s.df = get_or(st, "df", 0.0);
        if (st.contains("table")) s.table = breakpoints_from_json(st.at("table"), base);
      }
      if (fb.contains("detector")) {
        const json& det = fb.at("detector");
        reject_unknown(det, {"noise_sigma", "hold_interval"}, "feedback.detector");
        cfg.feedback.detector.noise_sigma = get_or(det, "noise_sigma", 0.0);
        cfg.feedback.detector.hold_interval = get_or(det, "hold_interval", 0.0);
      }
    }

    if (!doc.contains("run") || !doc.at("run").contains("t_end"))
      throw ConfigError("run.t_end is required");
    const json& run = doc.at("run");
    reject_unknown(run, {"t_end", "telemetry_interval", "seed", "init", "stop_rules", "checkpoint_interval"},
                   "run");
    cfg.t_end = run.at("t_end").get<double>();
    if (run.contains("telemetry_interval") && !run.at("telemetry_interval").is_null())
      cfg.telemetry_interval = run.at("telemetry_interval").get<double>();
    cfg.seed = get_or<std::uint64_t>(run, "seed", 0);
    cfg.checkpoint_interval = get_or(run, "checkpoint_interval", 1000.0);
    if (run.contains("init")) {
      const json& init = run.at("init");
      if (init.is_string()) {
        if (init.get<std::string>() != "infinite_temperature")
          throw ConfigError("unknown init '" + init.get<std::string>() + "'");
      } else if (init.is_object() && init.contains("aligned")) {
        cfg.init.kind = InitSpec::Kind::aligned;
        const auto v = init.at("aligned").get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("aligned direction must have three components");
        cfg.init.direction = Vec3<double>(v[0], v[1], v[2]);
      } else if (init.is_object() && init.contains("from_checkpoint")) {
        cfg.init.kind = InitSpec::Kind::from_checkpoint;
        cfg.init.checkpoint_path =
            resolve(base, init.at("from_checkpoint").get<std::string>()).string();
      } else {
        throw ConfigError("run.init must be \"infinite_temperature\", {\"aligned\": [...]} or "
                          "{\"from_checkpoint\": path}");
      }
    }
    if (run.contains("stop_rules")) {
      const json& sr = run.at("stop_rules");
      reject_unknown(sr, {"target_sz", "halt_on_tracking_lost"}, "run.stop_rules");
      if (sr.contains("target_sz") && !sr.at("target_sz").is_null())
        cfg.stop.target_sz = sr.at("target_sz").get<double>();
      cfg.stop.halt_on_tracking_lost = get_or(sr, "halt_on_tracking_lost", false);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json lattice = to_json(cfg.lattice);
  if (!cfg.custom_couplings.empty()) {
    json rows = json::array();
    for (const auto& c : cfg.custom_couplings)
      rows.push_back({c.displacement.x(), c.displacement.y(), c.displacement.z(), c.jz, c.jperp});
    lattice["custom_table"] = rows;
  }
  const auto& st = cfg.feedback.steering;
  json steering{{"kind", to_string(st.kind)},
                {"fdot", schedule_to_json(st.fdot)},
                {"dt_step", st.dt_step},
                {"df", st.df}};
  if (!st.table.empty()) steering["table"] = breakpoints_to_json(st.table);

  json init;
  switch (cfg.init.kind) {
    case InitSpec::Kind::infinite_temperature: init = "infinite_temperature"; break;
    case InitSpec::Kind::aligned:
      init = {{"aligned", {cfg.init.direction.x(), cfg.init.direction.y(), cfg.init.direction.z()}}};
      break;
    case InitSpec::Kind::from_checkpoint: init = {{"from_checkpoint", cfg.init.checkpoint_path}}; break;
  }

  return json{
      {"lattice", lattice},
      {"integrator",
       {{"scheme", to_string(cfg.integrator.scheme)},
        {"dt", cfg.integrator.dt},
        {"kernel", to_string(cfg.integrator.kernel)},
        {"threads", cfg.integrator.threads}}},
      {"feedback",
       {{"g0", schedule_to_json(cfg.feedback.g0)},
        {"omega", schedule_to_json(cfg.feedback.omega)},
        {"steering", steering},
        {"hz", cfg.feedback.hz},
        {"detector",
         {{"noise_sigma", cfg.feedback.detector.noise_sigma},
          {"hold_interval", cfg.feedback.detector.hold_interval}}},
        {"tracking_limit", cfg.feedback.tracking_limit}}},
      {"run",
       {{"t_end", cfg.t_end},
        {"telemetry_interval", cfg.telemetry_interval ? json(*cfg.telemetry_interval) : json(nullptr)},
        {"seed", cfg.seed},
        {"init", init},
        {"stop_rules",
         {{"target_sz", cfg.stop.target_sz ? json(*cfg.stop.target_sz) : json(nullptr)},
          {"halt_on_tracking_lost", cfg.stop.halt_on_tracking_lost}}},
        {"checkpoint_interval", cfg.checkpoint_interval}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

}  // namespace spincool
