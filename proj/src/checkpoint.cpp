#include "spincool/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "spincool/errors.hpp"

namespace spincool {

using nlohmann::json;

namespace {

void encode_le(double v, char* out) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
}

double decode_le(const char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto n = ckpt.spins.rows();
  json stats{{"max_abs_g", ckpt.stats.max_abs_g},
             {"max_abs_g_tracking", ckpt.stats.max_abs_g_tracking},
             {"max_tracking_error", ckpt.stats.max_tracking_error},
             {"tracking_lost_at",
              ckpt.stats.tracking_lost_at ? json(*ckpt.stats.tracking_lost_at) : json(nullptr)}};
  json header{{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"config", ckpt.config},
              {"seed", ckpt.seed},
              {"step", ckpt.step},
              {"t", ckpt.t},
              {"origin_t", ckpt.origin_t},
              {"origin_step", ckpt.origin_step},
              {"detector",
               {{"rng_state", ckpt.detector.rng_state},
                {"held_index", ckpt.detector.held_index},
                {"held_value", ckpt.detector.held_value},
                {"last_value", ckpt.detector.last_value}}},
              {"stats", stats},
              {"n_spins", n},
              {"payload", "f64le"}};

  std::vector<char> payload(static_cast<std::size_t>(n) * 3 * 8);
  for (Eigen::Index m = 0; m < n; ++m)
    for (int a = 0; a < 3; ++a) encode_le(ckpt.spins(m, a), &payload[(m * 3 + a) * 8]);

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    const std::string head = header.dump() + "\n";
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("short write to checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string head;
  if (!std::getline(in, head)) throw IoError("empty checkpoint " + path.string());

  Checkpoint ckpt;
  Eigen::Index n = 0;
  try {
    const json h = json::parse(head);
    if (h.at("format") != kCheckpointFormat || h.at("version") != kCheckpointVersion)
      throw IoError("unsupported checkpoint format in " + path.string());
    ckpt.config = h.at("config");
    ckpt.seed = h.at("seed").get<std::uint64_t>();
    ckpt.step = h.at("step").get<std::int64_t>();
    ckpt.t = h.at("t").get<double>();
    ckpt.origin_t = h.at("origin_t").get<double>();
    ckpt.origin_step = h.at("origin_step").get<std::int64_t>();
    const json& d = h.at("detector");
    ckpt.detector.rng_state = d.at("rng_state").get<std::uint64_t>();
    ckpt.detector.held_index = d.at("held_index").get<std::int64_t>();
    ckpt.detector.held_value = d.at("held_value").get<double>();
    ckpt.detector.last_value = d.at("last_value").get<double>();
    const json& s = h.at("stats");
    ckpt.stats.max_abs_g = s.at("max_abs_g").get<double>();
    ckpt.stats.max_abs_g_tracking = s.at("max_abs_g_tracking").get<double>();
    ckpt.stats.max_tracking_error = s.at("max_tracking_error").get<double>();
    if (!s.at("tracking_lost_at").is_null()) ckpt.stats.tracking_lost_at = s.at("tracking_lost_at").get<double>();
    n = h.at("n_spins").get<Eigen::Index>();
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }

  std::vector<char> payload(static_cast<std::size_t>(n) * 3 * 8);
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size()))
    throw IoError("truncated checkpoint payload in " + path.string());
  ckpt.spins.resize(n, 3);
  for (Eigen::Index m = 0; m < n; ++m)
    for (int a = 0; a < 3; ++a) ckpt.spins(m, a) = decode_le(&payload[(m * 3 + a) * 8]);
  return ckpt;
}

}  // namespace spincool
