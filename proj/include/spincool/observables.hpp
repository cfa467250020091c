#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spincool/dynamics.hpp"
#include "spincool/types.hpp"

namespace spincool {

/// Collective polarisation (M_x, M_y, M_z).
template <typename Scalar>
Vec3<Scalar> collective(const SpinState<Scalar>& state) {
  return state.spins.colwise().sum().transpose();
}

/// Unbiased sample variance. Throws ConfigError for fewer than two samples.
double transverse_variance(std::span<const double> samples);

enum class T2Method { one_over_e, integral };

std::string_view to_string(T2Method method);
T2Method t2_method_from_string(std::string_view name);

/// Correlation time of a uniformly sampled series from its normalised
/// autocorrelation C(tau) = <y(t) y(t+tau)> / <y^2>.
///   one_over_e: first tau with C <= 1/e, linearly interpolated.
///   integral:   trapezoidal integral of C up to its first zero crossing.
/// Throws ConfigError on non-uniform sampling or when the series ends before
/// the crossing is found within half its length.
double estimate_t2(std::span<const double> t, std::span<const double> y,
                   T2Method method = T2Method::one_over_e);

/// Normalised autocorrelation for lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> y, std::size_t max_lag);

struct ConditionReport {
  double delta_t = 0.0;     // effective step 2 pi / omega
  double delta_f = 0.0;     // |fdot| * delta_t
  double fluct_gain = 0.0;  // sigma^2 / (2 max(|mz|, sigma))
  bool cond_i = false;
  double ratio_ii = 0.0;    // 2 pi / (omega t2)
  bool cond_ii = false;
  double rho_iii = 0.0;     // g0 sqrt(N) / omega
  bool cond_iii = false;
  double delta_phi = 0.0;   // sigma / max(|mz|, sigma)
  bool small_angle = true;  // sigma << |mz|, where delta_phi ~ |dMy / Mz| holds
  std::vector<std::string> notes;

  bool all() const { return cond_i && cond_ii && cond_iii; }
};

inline constexpr double kRhoLow = 0.1;
inline constexpr double kRhoHigh = 10.0;

ConditionReport check_conditions(int n_spins, double mz, double sigma_my, double fdot, double omega,
                                 double g0, double t2);

/// Infinite-temperature transverse fluctuation scale sqrt(N / 3).
double analytic_sigma_my(int n_spins);

}  // namespace spincool
