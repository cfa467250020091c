#include "spincool/dynamics.hpp"

#include <cmath>

namespace spincool {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::rk4_renorm: return "rk4_renorm";
    case Scheme::rotation_splitting: return "rotation_splitting";
  }
  return "unknown";
}

std::string_view to_string(FieldKernelKind kind) {
  switch (kind) {
    case FieldKernelKind::automatic: return "auto";
    case FieldKernelKind::direct: return "direct";
    case FieldKernelKind::fft: return "fft";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "rk4_renorm") return Scheme::rk4_renorm;
  if (name == "rotation_splitting") return Scheme::rotation_splitting;
  throw ConfigError("unknown integrator scheme '" + std::string(name) + "'");
}

FieldKernelKind field_kernel_from_string(std::string_view name) {
  if (name == "auto" || name == "automatic") return FieldKernelKind::automatic;
  if (name == "direct") return FieldKernelKind::direct;
  if (name == "fft") return FieldKernelKind::fft;
  throw ConfigError("unknown field kernel '" + std::string(name) + "'");
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrator dt must be positive");
  if (threads < 0) throw ConfigError("integrator threads must be >= 0");
  if (scheme == Scheme::rotation_splitting && kernel == FieldKernelKind::fft)
    throw ConfigError("rotation_splitting requires the direct field kernel");
}

}  // namespace spincool
