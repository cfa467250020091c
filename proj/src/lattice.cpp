#include "spincool/lattice.hpp"

namespace spincool {

std::string_view to_string(CouplingRule rule) {
  switch (rule) {
    case CouplingRule::dipolar_truncated: return "dipolar_truncated";
    case CouplingRule::custom_table: return "custom_table";
  }
  return "unknown";
}

std::string_view to_string(ImageConvention convention) {
  switch (convention) {
    case ImageConvention::minimum_image_split: return "minimum_image_split";
    case ImageConvention::minimum_image_drop: return "minimum_image_drop";
  }
  return "unknown";
}

CouplingRule coupling_rule_from_string(std::string_view name) {
  if (name == "dipolar_truncated") return CouplingRule::dipolar_truncated;
  if (name == "custom_table") return CouplingRule::custom_table;
  throw ConfigError("unknown coupling rule '" + std::string(name) + "'");
}

ImageConvention image_convention_from_string(std::string_view name) {
  if (name == "minimum_image_split" || name == "split") return ImageConvention::minimum_image_split;
  if (name == "minimum_image_drop" || name == "drop") return ImageConvention::minimum_image_drop;
  throw ConfigError("unknown image convention '" + std::string(name) + "'");
}

void LatticeSpec::validate() const {
  for (int L : dims) {
    if (L < 1) throw ConfigError("lattice dimensions must be positive");
  }
  if (static_cast<long long>(dims[0]) * dims[1] * dims[2] < 2)
    throw ConfigError("lattice must contain at least two sites");
}

Index3 displacement_class(int m, int n, const LatticeSpec& spec) {
  Index3 d = spec.site_coords(n) - spec.site_coords(m);
  if (!spec.periodic) return d;
  for (int a = 0; a < 3; ++a) {
    const int L = spec.dims[a];
    int v = ((d[a] % L) + L) % L;
    if (v > L / 2) v -= L;
    d[a] = v;
  }
  return d;
}

}  // namespace spincool
