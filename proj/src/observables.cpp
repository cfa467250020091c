#include "spincool/observables.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "spincool/errors.hpp"

namespace spincool {

double transverse_variance(std::span<const double> samples) {
  if (samples.size() < 2) throw ConfigError("variance needs at least two samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return ss / (n - 1.0);
}

std::string_view to_string(T2Method method) {
  return method == T2Method::one_over_e ? "one_over_e" : "integral";
}

T2Method t2_method_from_string(std::string_view name) {
  if (name == "one_over_e") return T2Method::one_over_e;
  if (name == "integral") return T2Method::integral;
  throw ConfigError("unknown T2 method '" + std::string(name) + "'");
}

namespace {

double lag_correlation(std::span<const double> y, std::size_t k, double c0) {
  double acc = 0.0;
  const std::size_t count = y.size() - k;
  for (std::size_t i = 0; i < count; ++i) acc += y[i] * y[i + k];
  return acc / static_cast<double>(count) / c0;
}

double mean_square(std::span<const double> y) {
  double c0 = 0.0;
  for (double v : y) c0 += v * v;
  return c0 / static_cast<double>(y.size());
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> y, std::size_t max_lag) {
  if (y.size() < 2) throw ConfigError("autocorrelation needs at least two samples");
  const double c0 = mean_square(y);
  if (!(c0 > 0.0)) throw ConfigError("autocorrelation of an all-zero series");
  max_lag = std::min(max_lag, y.size() - 1);
  std::vector<double> c(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) c[k] = lag_correlation(y, k, c0);
  return c;
}

double estimate_t2(std::span<const double> t, std::span<const double> y, T2Method method) {
  if (t.size() != y.size()) throw ConfigError("time and value series differ in length");
  if (y.size() < 4) throw ConfigError("series too short for a T2 estimate");
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw ConfigError("series times must increase");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt)
      throw ConfigError("series is not uniformly sampled");
  }
  const double c0 = mean_square(y);
  if (!(c0 > 0.0)) throw ConfigError("T2 estimate of an all-zero series");

  const double threshold = method == T2Method::one_over_e ? std::exp(-1.0) : 0.0;
  const std::size_t max_lag = y.size() / 2;
  double prev = 1.0;
  double area = 0.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const double c = lag_correlation(y, k, c0);
    if (c <= threshold) {
      const double frac = (prev - threshold) / (prev - c);
      if (method == T2Method::one_over_e) return dt * (static_cast<double>(k - 1) + frac);
      return area + 0.5 * prev * frac * dt;
    }
    area += 0.5 * (prev + c) * dt;
    prev = c;
  }
  throw ConfigError("series too short: autocorrelation never crossed its threshold");
}

double analytic_sigma_my(int n_spins) { return std::sqrt(n_spins / 3.0); }

ConditionReport check_conditions(int n_spins, double mz, double sigma_my, double fdot, double omega,
                                 double g0, double t2) {
  if (n_spins < 1 || !(omega > 0.0) || !(t2 > 0.0) || !(sigma_my >= 0.0))
    throw ConfigError("check_conditions needs n_spins >= 1, omega > 0, t2 > 0, sigma_my >= 0");
  ConditionReport r;
  r.delta_t = 2.0 * std::numbers::pi / omega;
  r.delta_f = std::abs(fdot) * r.delta_t;
  const double scale = std::max(std::abs(mz), sigma_my);
  r.fluct_gain = scale > 0.0 ? sigma_my * sigma_my / (2.0 * scale) : 0.0;
  r.cond_i = r.delta_f < r.fluct_gain;

  r.ratio_ii = r.delta_t / t2;
  r.cond_ii = r.delta_t >= t2;

  r.rho_iii = g0 * std::sqrt(static_cast<double>(n_spins)) / omega;
  r.cond_iii = r.rho_iii >= kRhoLow && r.rho_iii <= kRhoHigh;

  r.delta_phi = scale > 0.0 ? sigma_my / scale : 0.0;
  r.small_angle = sigma_my < std::abs(mz);
  if (!r.small_angle)
    r.notes.emplace_back("small-angle approximation |dMy| << |Mz| violated; delta_phi clamped");
  if (!r.cond_i) r.notes.emplace_back("(i) steering jump exceeds capturable fluctuation");
  if (!r.cond_ii) r.notes.emplace_back("(ii) drive period shorter than T2");
  if (!r.cond_iii) r.notes.emplace_back("(iii) g0 sqrt(N) / omega outside [0.1, 10]");
  return r;
}

}  // namespace spincool
