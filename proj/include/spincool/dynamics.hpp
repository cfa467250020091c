#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "spincool/errors.hpp"
#include "spincool/lattice.hpp"
#include "spincool/types.hpp"

namespace spincool {

template <typename Scalar>
struct SpinState {
  SpinArray<Scalar> spins;
  Scalar t = 0;

  int size() const { return static_cast<int>(spins.rows()); }
};

enum class Scheme { rk4_renorm, rotation_splitting };

/// Which route evaluates the interaction fields. `automatic` picks the FFT
/// convolution for N >= 512 under rk4_renorm and the dense kernel otherwise.
enum class FieldKernelKind { automatic, direct, fft };

std::string_view to_string(Scheme scheme);
std::string_view to_string(FieldKernelKind kind);
Scheme scheme_from_string(std::string_view name);
FieldKernelKind field_kernel_from_string(std::string_view name);

struct IntegratorConfig {
  Scheme scheme = Scheme::rk4_renorm;
  double dt = 0.01;
  FieldKernelKind kernel = FieldKernelKind::automatic;
  int threads = 1;  // 0 = all hardware threads

  void validate() const;
};

template <typename Scalar>
Scalar max_norm_error(const SpinArray<Scalar>& spins) {
  return (spins.rowwise().norm().array() - Scalar(1)).abs().maxCoeff();
}

template <typename Scalar>
void renormalize(SpinArray<Scalar>& spins) {
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> norms = spins.rowwise().norm().array();
  spins.array().colwise() /= norms;
}

/// Adds the feedback drive (-g along x) and Zeeman field (-h_z along z).
template <typename Scalar>
void add_drive(FieldArray<Scalar>& h, Scalar drive, Scalar hz) {
  h.col(0).array() -= drive;
  if (hz != Scalar(0)) h.col(2).array() -= hz;
}

/// Reference O(N^2) local fields h_m = -dH/dS_m, built from pairwise table
/// lookups. Slow; used for validation and small systems.
template <typename Scalar>
FieldArray<Scalar> local_fields(const SpinState<Scalar>& state, const CouplingTable<Scalar>& table,
                                Scalar drive, Scalar hz) {
  const int n = state.size();
  if (n != table.n_sites()) throw ConfigError("spin state and coupling table sizes differ");
  const auto& spec = table.spec();
  const auto& s = state.spins;
  FieldArray<Scalar> h(n, 3);
  for (int m = 0; m < n; ++m) {
    Vec3<Scalar> acc = Vec3<Scalar>::Zero();
    for (int k = 0; k < n; ++k) {
      if (k == m) continue;
      const Index3 d = displacement_class(m, k, spec);
      const Scalar jp = table.jperp(d);
      acc.x() += jp * s(k, 0);
      acc.y() += jp * s(k, 1);
      acc.z() += table.jz(d) * s(k, 2);
    }
    h(m, 0) = -(acc.x() + drive);
    h(m, 1) = -acc.y();
    h(m, 2) = -(acc.z() + hz);
  }
  return h;
}

/// H0 on the state, summed pairwise over m < n, plus h_z * M_z.
template <typename Scalar>
Scalar energy(const SpinState<Scalar>& state, const CouplingTable<Scalar>& table, Scalar hz) {
  const int n = state.size();
  if (n != table.n_sites()) throw ConfigError("spin state and coupling table sizes differ");
  const auto& spec = table.spec();
  const auto& s = state.spins;
  Scalar e(0);
  for (int m = 0; m < n; ++m) {
    for (int k = m + 1; k < n; ++k) {
      const Index3 d = displacement_class(m, k, spec);
      e += table.jz(d) * s(m, 2) * s(k, 2) +
           table.jperp(d) * (s(m, 0) * s(k, 0) + s(m, 1) * s(k, 1));
    }
  }
  return e + hz * s.col(2).sum();
}

/// H0 from precomputed interaction fields (no drive or Zeeman part in h_int).
template <typename Scalar>
Scalar energy_from_fields(const SpinArray<Scalar>& spins, const FieldArray<Scalar>& h_int,
                          Scalar hz) {
  return Scalar(-0.5) * spins.cwiseProduct(h_int).sum() + hz * spins.col(2).sum();
}

/// Dense O(N^2) interaction kernel. Each site's sum is a fixed-order dot
/// product, so results do not depend on the thread count.
template <typename Scalar>
class DirectFieldKernel {
 public:
  static constexpr int kMaxSites = 8192;

  explicit DirectFieldKernel(const CouplingTable<Scalar>& table, int threads = 1)
      : threads_(threads < 1 ? 1 : threads) {
    if (table.n_sites() > kMaxSites)
      throw ConfigError("direct field kernel limited to " + std::to_string(kMaxSites) + " sites");
    jz_ = table.dense_jz();
    jperp_ = table.dense_jperp();
  }

  int size() const { return static_cast<int>(jz_.rows()); }
  const CouplingMatrix<Scalar>& jz() const { return jz_; }
  const CouplingMatrix<Scalar>& jperp() const { return jperp_; }

  /// h_int = -(sum_n J_mn S_n) per component, without drive.
  void interaction_fields(const SpinArray<Scalar>& s, FieldArray<Scalar>& h) const {
    const int n = size();
    h.resize(n, 3);
#pragma omp parallel for schedule(static) num_threads(threads_) if (threads_ > 1)
    for (int m = 0; m < n; ++m) {
      h(m, 0) = -jperp_.col(m).dot(s.col(0));
      h(m, 1) = -jperp_.col(m).dot(s.col(1));
      h(m, 2) = -jz_.col(m).dot(s.col(2));
    }
  }

 private:
  CouplingMatrix<Scalar> jz_;
  CouplingMatrix<Scalar> jperp_;
  int threads_;
};

/// dS/dt = S x h, row by row.
template <typename Scalar>
void precession_rate(const SpinArray<Scalar>& s, const FieldArray<Scalar>& h, SpinArray<Scalar>& out) {
  out.resize(s.rows(), 3);
  out.col(0) = s.col(1).cwiseProduct(h.col(2)) - s.col(2).cwiseProduct(h.col(1));
  out.col(1) = s.col(2).cwiseProduct(h.col(0)) - s.col(0).cwiseProduct(h.col(2));
  out.col(2) = s.col(0).cwiseProduct(h.col(1)) - s.col(1).cwiseProduct(h.col(0));
}

/// Exact solution of dS/dt = S x h over time tau for constant h: rotation of
/// S about h by angle -|h| tau.
template <typename Scalar>
Vec3<Scalar> precess(const Vec3<Scalar>& s, const Vec3<Scalar>& h, Scalar tau) {
  using std::cos;
  using std::sin;
  const Scalar magnitude = h.norm();
  if (magnitude == Scalar(0)) return s;
  const Vec3<Scalar> axis = h / magnitude;
  const Scalar angle = -magnitude * tau;
  const Scalar c = cos(angle), sn = sin(angle);
  return s * c + axis.cross(s) * sn + axis * (axis.dot(s) * (Scalar(1) - c));
}

template <typename Scalar>
struct StepWorkspace {
  FieldArray<Scalar> h;
  SpinArray<Scalar> k1, k2, k3, k4, stage, next;
};

namespace detail {

template <typename Scalar>
void require_finite(const SpinArray<Scalar>& s, Scalar t) {
  if (!s.allFinite())
    throw NumericalError("non-finite spin state after step ending at t=" + std::to_string(double(t)));
}

}  // namespace detail

/// Classical RK4 on dS/dt = S x h(t, S) followed by per-spin renormalisation.
/// `fields(t, spins, h)` is re-evaluated at every stage, so a drive that
/// depends on M_z sees the stage state. On a non-finite result the state is
/// left untouched and NumericalError is thrown.
template <typename Scalar, typename FieldProvider>
void rk4_renorm_step(SpinState<Scalar>& state, Scalar dt, FieldProvider&& fields,
                     StepWorkspace<Scalar>& ws) {
  const auto& s = state.spins;
  const Scalar t = state.t;
  const Scalar half = dt / Scalar(2);

  fields(t, s, ws.h);
  precession_rate(s, ws.h, ws.k1);

  ws.stage = s + half * ws.k1;
  fields(t + half, ws.stage, ws.h);
  precession_rate(ws.stage, ws.h, ws.k2);

  ws.stage = s + half * ws.k2;
  fields(t + half, ws.stage, ws.h);
  precession_rate(ws.stage, ws.h, ws.k3);

  ws.stage = s + dt * ws.k3;
  fields(t + dt, ws.stage, ws.h);
  precession_rate(ws.stage, ws.h, ws.k4);

  ws.next = s + (dt / Scalar(6)) * (ws.k1 + Scalar(2) * ws.k2 + Scalar(2) * ws.k3 + ws.k4);
  renormalize(ws.next);
  detail::require_finite(ws.next, t + dt);
  state.spins.swap(ws.next);
  state.t = t + dt;
}

/// Symmetric single-spin splitting: spins 0..N-2 are rotated for dt/2, spin
/// N-1 for dt, then N-2..0 for dt/2 again. Each rotation is the exact
/// precession about the spin's current local field, which excludes the spin
/// itself (zero self-coupling); the remaining fields are updated in O(N)
/// after each rotation. The drive is sampled at the step midpoint with the
/// running M_z. Time-reversible and norm-preserving.
template <typename Scalar, typename Drive>
void rotation_splitting_step(SpinState<Scalar>& state, Scalar dt,
                             const DirectFieldKernel<Scalar>& kernel, Drive&& drive, Scalar hz,
                             StepWorkspace<Scalar>& ws) {
  auto& s = state.spins;
  const int n = state.size();
  ws.next = s;  // last good state
  kernel.interaction_fields(s, ws.h);
  Scalar mz = s.col(2).sum();
  const Scalar t_mid = state.t + dt / Scalar(2);
  const auto& jz = kernel.jz();
  const auto& jperp = kernel.jperp();

  auto rotate = [&](int m, Scalar tau) {
    const Scalar g = drive(t_mid, mz);
    const Vec3<Scalar> h(ws.h(m, 0) - g, ws.h(m, 1), ws.h(m, 2) - hz);
    const Vec3<Scalar> old = s.row(m).transpose();
    const Vec3<Scalar> now = precess<Scalar>(old, h, tau);
    const Vec3<Scalar> delta = now - old;
    s.row(m) = now.transpose();
    mz += delta.z();
    ws.h.col(0).noalias() -= jperp.col(m) * delta.x();
    ws.h.col(1).noalias() -= jperp.col(m) * delta.y();
    ws.h.col(2).noalias() -= jz.col(m) * delta.z();
  };

  const Scalar half = dt / Scalar(2);
  for (int m = 0; m < n - 1; ++m) rotate(m, half);
  rotate(n - 1, dt);
  for (int m = n - 2; m >= 0; --m) rotate(m, half);

  if (!s.allFinite()) {
    s.swap(ws.next);
    detail::require_finite(ws.next, state.t + dt);
  }
  state.t += dt;
}

/// Generic step for any field provider; only rk4_renorm can work from a
/// black-box provider.
template <typename Scalar, typename FieldProvider>
void step(SpinState<Scalar>& state, const IntegratorConfig& cfg, FieldProvider&& fields,
          StepWorkspace<Scalar>& ws) {
  if (cfg.scheme != Scheme::rk4_renorm)
    throw ConfigError("rotation_splitting needs pairwise couplings; use the kernel overload");
  rk4_renorm_step(state, Scalar(cfg.dt), fields, ws);
}

/// Step with the dense kernel, any scheme. `drive(t, mz)` returns g.
template <typename Scalar, typename Drive>
void step(SpinState<Scalar>& state, const IntegratorConfig& cfg,
          const DirectFieldKernel<Scalar>& kernel, Drive&& drive, Scalar hz,
          StepWorkspace<Scalar>& ws) {
  const Scalar dt(cfg.dt);
  if (cfg.scheme == Scheme::rotation_splitting) {
    rotation_splitting_step(state, dt, kernel, drive, hz, ws);
    return;
  }
  auto fields = [&](Scalar t, const SpinArray<Scalar>& s, FieldArray<Scalar>& h) {
    kernel.interaction_fields(s, h);
    add_drive(h, Scalar(drive(t, s.col(2).sum())), hz);
  };
  rk4_renorm_step(state, dt, fields, ws);
}

}  // namespace spincool
