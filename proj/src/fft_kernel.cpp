#include "spincool/fft_kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <vector>

#include "spincool/errors.hpp"
#include "spincool/rng.hpp"

namespace spincool {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct FftwDeleter {
  void operator()(T* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <typename T>
FftwBuffer<T> allocate(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  std::memset(static_cast<void*>(p), 0, sizeof(T) * n);
  return FftwBuffer<T>(p);
}

}  // namespace

struct FftFieldKernel::Impl {
  int n_sites = 0;
  int total = 0;       // grid points
  int half_total = 0;  // r2c output length
  bool padded = false;
  std::vector<int> site_to_grid;

  FftwBuffer<fftw_complex> xy;
  FftwBuffer<double> z;
  FftwBuffer<fftw_complex> z_hat;
  std::vector<double> kperp_hat;  // length total
  std::vector<double> kz_hat;     // length half_total

  fftw_plan fwd_xy = nullptr, bwd_xy = nullptr, fwd_z = nullptr, bwd_z = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {fwd_xy, bwd_xy, fwd_z, bwd_z})
      if (p != nullptr) fftw_destroy_plan(p);
  }
};

FftFieldKernel::FftFieldKernel(const CouplingTable<double>& table) : impl_(std::make_unique<Impl>()) {
  auto& d = *impl_;
  const auto& spec = table.spec();
  const auto grid = table.grid_dims();
  d.n_sites = spec.n_sites();
  d.total = grid[0] * grid[1] * grid[2];
  d.half_total = grid[0] * grid[1] * (grid[2] / 2 + 1);
  d.padded = !spec.periodic;

  d.site_to_grid.resize(d.n_sites);
  for (int m = 0; m < d.n_sites; ++m) {
    const Index3 c = spec.site_coords(m);
    d.site_to_grid[m] = (c.x() * grid[1] + c.y()) * grid[2] + c.z();
  }

  d.xy = allocate<fftw_complex>(d.total);
  d.z = allocate<double>(d.total);
  d.z_hat = allocate<fftw_complex>(d.half_total);

  {
    std::lock_guard lock(planner_mutex());
    d.fwd_xy = fftw_plan_dft_3d(grid[0], grid[1], grid[2], d.xy.get(), d.xy.get(), FFTW_FORWARD,
                                FFTW_ESTIMATE);
    d.bwd_xy = fftw_plan_dft_3d(grid[0], grid[1], grid[2], d.xy.get(), d.xy.get(), FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    d.fwd_z = fftw_plan_dft_r2c_3d(grid[0], grid[1], grid[2], d.z.get(), d.z_hat.get(), FFTW_ESTIMATE);
    d.bwd_z = fftw_plan_dft_c2r_3d(grid[0], grid[1], grid[2], d.z_hat.get(), d.z.get(), FFTW_ESTIMATE);
  }
  if (!d.fwd_xy || !d.bwd_xy || !d.fwd_z || !d.bwd_z) throw NumericalError("FFTW planning failed");

  // Kernel spectra, normalised by the grid size so one inverse transform
  // finishes the convolution.
  const double scale = 1.0 / d.total;
  const auto& jperp = table.jperp_grid();
  const auto& jz = table.jz_grid();
  for (int i = 0; i < d.total; ++i) {
    d.xy[i][0] = jperp[i];
    d.xy[i][1] = 0.0;
    d.z[i] = jz[i];
  }
  fftw_execute(d.fwd_xy);
  fftw_execute(d.fwd_z);
  d.kperp_hat.resize(d.total);
  d.kz_hat.resize(d.half_total);
  for (int i = 0; i < d.total; ++i) d.kperp_hat[i] = d.xy[i][0] * scale;
  for (int i = 0; i < d.half_total; ++i) d.kz_hat[i] = d.z_hat[i][0] * scale;
  std::fill_n(&d.xy[0][0], 2 * d.total, 0.0);
  std::fill_n(d.z.get(), d.total, 0.0);
}

FftFieldKernel::~FftFieldKernel() = default;
FftFieldKernel::FftFieldKernel(FftFieldKernel&&) noexcept = default;
FftFieldKernel& FftFieldKernel::operator=(FftFieldKernel&&) noexcept = default;

int FftFieldKernel::size() const { return impl_->n_sites; }

void FftFieldKernel::interaction_fields(const SpinArray<double>& s, FieldArray<double>& h) {
  auto& d = *impl_;
  if (s.rows() != d.n_sites) throw ConfigError("spin state and FFT kernel sizes differ");
  h.resize(d.n_sites, 3);

  // c2r destroys its input and the complex transform is in place, so padded
  // grids must be re-zeroed every call.
  if (d.padded) {
    std::fill_n(&d.xy[0][0], 2 * d.total, 0.0);
    std::fill_n(d.z.get(), d.total, 0.0);
  }
  for (int m = 0; m < d.n_sites; ++m) {
    const int g = d.site_to_grid[m];
    d.xy[g][0] = s(m, 0);
    d.xy[g][1] = s(m, 1);
    d.z[g] = s(m, 2);
  }

  fftw_execute(d.fwd_xy);
  for (int i = 0; i < d.total; ++i) {
    d.xy[i][0] *= d.kperp_hat[i];
    d.xy[i][1] *= d.kperp_hat[i];
  }
  fftw_execute(d.bwd_xy);

  fftw_execute(d.fwd_z);
  for (int i = 0; i < d.half_total; ++i) {
    d.z_hat[i][0] *= d.kz_hat[i];
    d.z_hat[i][1] *= d.kz_hat[i];
  }
  fftw_execute(d.bwd_z);

  for (int m = 0; m < d.n_sites; ++m) {
    const int g = d.site_to_grid[m];
    h(m, 0) = -d.xy[g][0];
    h(m, 1) = -d.xy[g][1];
    h(m, 2) = -d.z[g];
  }
}

double fft_self_test(FftFieldKernel& kernel, const CouplingTable<double>& table, std::uint64_t seed,
                     int max_sites) {
  const int n = table.n_sites();
  SplitMix64 rng(seed);
  SpinArray<double> s(n, 3);
  for (int m = 0; m < n; ++m) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(1.0 - z * z);
    s.row(m) << r * std::cos(phi), r * std::sin(phi), z;
  }
  FieldArray<double> h;
  kernel.interaction_fields(s, h);

  const int stride = std::max(1, n / std::max(1, max_sites));
  const auto& spec = table.spec();
  double worst = 0.0;
  for (int m = 0; m < n; m += stride) {
    Vec3<double> acc = Vec3<double>::Zero();
    for (int k = 0; k < n; ++k) {
      if (k == m) continue;
      const Index3 disp = displacement_class(m, k, spec);
      acc.x() += table.jperp(disp) * s(k, 0);
      acc.y() += table.jperp(disp) * s(k, 1);
      acc.z() += table.jz(disp) * s(k, 2);
    }
    worst = std::max(worst, (h.row(m).transpose() + acc).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace spincool
