#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spincool/errors.hpp"
#include "spincool/types.hpp"

namespace spincool {

enum class CouplingRule { dipolar_truncated, custom_table };

/// How a periodic displacement is reduced to a single image.
///   minimum_image_split: an axis component of exactly L/2 (even L) is
///     ambiguous; both images contribute with weight 1/2.
///   minimum_image_drop: any class with such a component gets zero coupling.
enum class ImageConvention { minimum_image_split, minimum_image_drop };

std::string_view to_string(CouplingRule rule);
std::string_view to_string(ImageConvention convention);
CouplingRule coupling_rule_from_string(std::string_view name);
ImageConvention image_convention_from_string(std::string_view name);

/// Simple cubic lattice with unit spacing. Sites are numbered
/// m = (x * Ly + y) * Lz + z.
struct LatticeSpec {
  std::array<int, 3> dims{1, 1, 2};
  bool periodic = true;
  CouplingRule coupling_rule = CouplingRule::dipolar_truncated;
  ImageConvention image_convention = ImageConvention::minimum_image_split;

  int n_sites() const { return dims[0] * dims[1] * dims[2]; }

  int site_index(const Index3& c) const { return (c.x() * dims[1] + c.y()) * dims[2] + c.z(); }

  Index3 site_coords(int m) const {
    return {m / (dims[1] * dims[2]), (m / dims[2]) % dims[1], m % dims[2]};
  }

  /// Throws ConfigError unless every L >= 1 and N >= 2.
  void validate() const;

  bool operator==(const LatticeSpec&) const = default;
};

/// One entry of a user-supplied coupling table.
struct CustomCoupling {
  Index3 displacement;
  double jz = 0.0;
  double jperp = 0.0;
};

/// Displacement r_n - r_m reduced per the lattice boundary conditions. Under
/// periodic boundaries each component lies in (-L/2, L/2]; a tie is reported
/// as +L/2.
Index3 displacement_class(int m, int n, const LatticeSpec& spec);

/// Truncated dipolar coupling J^z = (1 - 3 cos^2 theta) / (2 r^3) for a raw
/// (unreduced) displacement, theta measured from the z axis. Zero at d = 0.
template <typename Scalar>
Scalar dipolar_jz(const Index3& d) {
  const Scalar x = d.x(), y = d.y(), z = d.z();
  const Scalar r2 = x * x + y * y + z * z;
  if (r2 == Scalar(0)) return Scalar(0);
  using std::sqrt;
  return (r2 - Scalar(3) * z * z) / (Scalar(2) * r2 * r2 * sqrt(r2));
}

/// Couplings per displacement class, stored on the convolution grid: extent L
/// per axis for periodic lattices, 2L (zero padded) for open ones. Entry
/// (i, j, k) holds the coupling for displacement (i, j, k) modulo the grid.
template <typename Scalar>
class CouplingTable {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  CouplingTable() = default;
  explicit CouplingTable(const LatticeSpec& spec) : spec_(spec) {
    for (int a = 0; a < 3; ++a) grid_[a] = spec.periodic ? spec.dims[a] : 2 * spec.dims[a];
    jz_ = Vector::Zero(grid_size());
    jperp_ = Vector::Zero(grid_size());
  }

  const LatticeSpec& spec() const { return spec_; }
  const std::array<int, 3>& grid_dims() const { return grid_; }
  int grid_size() const { return grid_[0] * grid_[1] * grid_[2]; }
  int n_sites() const { return spec_.n_sites(); }

  int grid_index(const Index3& d) const {
    auto wrap = [](int v, int p) { return ((v % p) + p) % p; };
    return (wrap(d.x(), grid_[0]) * grid_[1] + wrap(d.y(), grid_[1])) * grid_[2] +
           wrap(d.z(), grid_[2]);
  }

  Scalar jz(const Index3& d) const { return jz_[grid_index(d)]; }
  Scalar jperp(const Index3& d) const { return jperp_[grid_index(d)]; }

  Scalar jz(int m, int n) const { return jz(displacement_class(m, n, spec_)); }
  Scalar jperp(int m, int n) const { return jperp(displacement_class(m, n, spec_)); }

  /// Grid-ordered coupling arrays, the convolution kernels.
  const Vector& jz_grid() const { return jz_; }
  const Vector& jperp_grid() const { return jperp_; }

  void set(const Index3& d, Scalar jz, Scalar jperp) {
    const int i = grid_index(d);
    jz_[i] = jz;
    jperp_[i] = jperp;
  }

  /// Canonical representative of every displacement class reachable between
  /// two sites, in grid order.
  std::vector<Index3> classes() const {
    std::vector<Index3> out;
    auto reps = [&](int a) {
      std::vector<int> r;
      const int L = spec_.dims[a];
      if (spec_.periodic) {
        for (int v = 0; v < L; ++v) r.push_back(v > L / 2 ? v - L : v);
      } else {
        for (int v = 0; v < L; ++v) r.push_back(v);
        for (int v = -(L - 1); v < 0; ++v) r.push_back(v);
      }
      return r;
    };
    const auto rx = reps(0), ry = reps(1), rz = reps(2);
    out.reserve(rx.size() * ry.size() * rz.size());
    for (int x : rx)
      for (int y : ry)
        for (int z : rz) out.emplace_back(x, y, z);
    return out;
  }

  /// Dense N x N pairwise matrices (symmetric, zero diagonal).
  CouplingMatrix<Scalar> dense_jz() const { return dense(jz_); }
  CouplingMatrix<Scalar> dense_jperp() const { return dense(jperp_); }

 private:
  CouplingMatrix<Scalar> dense(const Vector& grid) const {
    const int n = n_sites();
    CouplingMatrix<Scalar> out(n, n);
    for (int col = 0; col < n; ++col) {
      const Index3 cn = spec_.site_coords(col);
      for (int row = 0; row < n; ++row) {
        out(row, col) = grid[grid_index(cn - spec_.site_coords(row))];
      }
    }
    return out;
  }

  LatticeSpec spec_;
  std::array<int, 3> grid_{0, 0, 0};
  Vector jz_;
  Vector jperp_;
};

namespace detail {

// Image-resolved dipolar coupling of a reduced periodic displacement.
template <typename Scalar>
Scalar periodic_dipolar_jz(const Index3& d, const LatticeSpec& spec) {
  std::array<std::array<int, 2>, 3> images{};
  std::array<int, 3> count{};
  for (int a = 0; a < 3; ++a) {
    const int L = spec.dims[a];
    const bool tie = L % 2 == 0 && std::abs(d[a]) == L / 2 && L > 0 && d[a] != 0;
    if (tie) {
      if (spec.image_convention == ImageConvention::minimum_image_drop) return Scalar(0);
      images[a] = {L / 2, -L / 2};
      count[a] = 2;
    } else {
      images[a] = {d[a], 0};
      count[a] = 1;
    }
  }
  Scalar sum(0);
  for (int i = 0; i < count[0]; ++i)
    for (int j = 0; j < count[1]; ++j)
      for (int k = 0; k < count[2]; ++k)
        sum += dipolar_jz<Scalar>(Index3(images[0][i], images[1][j], images[2][k]));
  return sum / Scalar(count[0] * count[1] * count[2]);
}

}  // namespace detail

/// Precomputes couplings for every displacement class. J^perp = -J^z / 2 is
/// derived from the same evaluation for the dipolar rule. A custom table must
/// be supplied for CouplingRule::custom_table; its missing entries are zero
/// and each entry is mirrored to -d.
template <typename Scalar>
CouplingTable<Scalar> build_couplings(const LatticeSpec& spec,
                                      std::span<const CustomCoupling> custom = {}) {
  spec.validate();
  CouplingTable<Scalar> table(spec);

  if (spec.coupling_rule == CouplingRule::custom_table) {
    if (custom.empty()) throw ConfigError("custom_table coupling rule requires a coupling table");
    std::vector<char> seen(table.grid_size(), 0);
    for (const auto& entry : custom) {
      const Index3 d = entry.displacement;
      for (int a = 0; a < 3; ++a) {
        const int L = spec.dims[a];
        if (!spec.periodic && std::abs(d[a]) >= L)
          throw ConfigError("custom coupling displacement outside the open lattice");
      }
      const bool self = spec.periodic ? table.grid_index(d) == table.grid_index(Index3::Zero())
                                      : d.isZero();
      if (self) {
        if (entry.jz != 0.0 || entry.jperp != 0.0)
          throw ConfigError("custom coupling table has non-zero self coupling");
        continue;
      }
      for (const Index3& key : {d, Index3(-d)}) {
        const int i = table.grid_index(key);
        if (seen[i] && (table.jz_grid()[i] != Scalar(entry.jz) ||
                        table.jperp_grid()[i] != Scalar(entry.jperp)))
          throw ConfigError("custom coupling table is not symmetric under d -> -d");
        table.set(key, Scalar(entry.jz), Scalar(entry.jperp));
        seen[i] = 1;
      }
    }
    return table;
  }

  for (const Index3& d : table.classes()) {
    const Scalar jz = spec.periodic ? detail::periodic_dipolar_jz<Scalar>(d, spec)
                                    : dipolar_jz<Scalar>(d);
    table.set(d, jz, -jz / Scalar(2));
  }
  return table;
}

}  // namespace spincool
