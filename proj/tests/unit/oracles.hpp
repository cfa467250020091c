#pragma once

// Reference computations written from the defining formulas, without going
// through the library's displacement classes, grids or kernels.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

// (1 - 3 cos^2 theta) / (2 r^3), theta from the z axis.
inline double dipolar(double dx, double dy, double dz) {
  const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (r == 0.0) return 0.0;
  const double c = dz / r;
  return (1.0 - 3.0 * c * c) / (2.0 * r * r * r);
}

// Coordinates of site m for dims (Lx, Ly, Lz), z fastest.
inline std::array<int, 3> coords(int m, const std::array<int, 3>& dims) {
  return {m / (dims[1] * dims[2]), (m / dims[2]) % dims[1], m % dims[2]};
}

// Candidate periodic images along one axis with minimal |d|; two of them
// when the minimum is attained at +L/2 and -L/2.
inline std::vector<int> nearest_images(int raw, int L) {
  std::vector<int> best;
  int best_abs = 1 << 30;
  for (int k = -2; k <= 2; ++k) {
    const int d = raw + k * L;
    if (std::abs(d) < best_abs) {
      best_abs = std::abs(d);
      best = {d};
    } else if (std::abs(d) == best_abs && d != best.front()) {
      best.push_back(d);
    }
  }
  return best;
}

enum class Images { split, drop };

// J^z between sites m and n.
inline double jz(int m, int n, const std::array<int, 3>& dims, bool periodic,
                 Images rule = Images::split) {
  if (m == n) return 0.0;
  const auto a = coords(m, dims), b = coords(n, dims);
  if (!periodic) return dipolar(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
  std::array<std::vector<int>, 3> img;
  for (int k = 0; k < 3; ++k) {
    img[k] = nearest_images(b[k] - a[k], dims[k]);
    if (img[k].size() > 1 && rule == Images::drop) return 0.0;
  }
  double sum = 0.0;
  int count = 0;
  for (int x : img[0])
    for (int y : img[1])
      for (int z : img[2]) {
        sum += dipolar(x, y, z);
        ++count;
      }
  return sum / count;
}

// Pairwise fields h_m = -dH/dS_m from explicit double loops.
inline std::vector<std::array<double, 3>> fields(const std::vector<std::array<double, 3>>& s,
                                                 const std::array<int, 3>& dims, bool periodic,
                                                 double g = 0.0, double hz = 0.0) {
  const int n = static_cast<int>(s.size());
  std::vector<std::array<double, 3>> h(n, {0.0, 0.0, 0.0});
  for (int m = 0; m < n; ++m) {
    double ax = 0.0, ay = 0.0, az = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == m) continue;
      const double z = jz(m, k, dims, periodic);
      ax += -0.5 * z * s[k][0];
      ay += -0.5 * z * s[k][1];
      az += z * s[k][2];
    }
    h[m] = {-(ax + g), -ay, -(az + hz)};
  }
  return h;
}

inline double energy(const std::vector<std::array<double, 3>>& s, const std::array<int, 3>& dims,
                     bool periodic) {
  const int n = static_cast<int>(s.size());
  double e = 0.0;
  for (int m = 0; m < n; ++m)
    for (int k = m + 1; k < n; ++k) {
      const double z = jz(m, k, dims, periodic);
      e += z * s[m][2] * s[k][2] - 0.5 * z * (s[m][0] * s[k][0] + s[m][1] * s[k][1]);
    }
  return e;
}

// Uniform unit vectors from the standard library generator (deliberately not
// the library's sampler).
inline std::vector<std::array<double, 3>> random_spins(int n, std::uint32_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss;
  std::vector<std::array<double, 3>> s(n);
  for (auto& v : s) {
    double x = gauss(gen), y = gauss(gen), z = gauss(gen);
    const double r = std::sqrt(x * x + y * y + z * z);
    v = {x / r, y / r, z / r};
  }
  return s;
}

}  // namespace oracle
