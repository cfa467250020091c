#pragma once

#include <memory>

#include "spincool/lattice.hpp"
#include "spincool/types.hpp"

namespace spincool {

/// Interaction fields by periodic convolution on the coupling grid (FFTW).
/// S_x and S_y are transformed together as one complex field, S_z as a real
/// one; the coupling kernels are even, so their spectra are real.
///
/// Plans use FFTW_ESTIMATE so the chosen algorithm, and hence every bit of
/// the result, is reproducible between runs. Not safe for concurrent calls on
/// one instance; separate instances are independent.
class FftFieldKernel {
 public:
  explicit FftFieldKernel(const CouplingTable<double>& table);
  ~FftFieldKernel();
  FftFieldKernel(FftFieldKernel&&) noexcept;
  FftFieldKernel& operator=(FftFieldKernel&&) noexcept;
  FftFieldKernel(const FftFieldKernel&) = delete;
  FftFieldKernel& operator=(const FftFieldKernel&) = delete;

  int size() const;

  /// h_int = -(sum_n J_mn S_n) per component, without drive.
  void interaction_fields(const SpinArray<double>& s, FieldArray<double>& h);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Largest per-component deviation between the FFT kernel and pairwise table
/// sums on up to `max_sites` sites of a random state.
double fft_self_test(FftFieldKernel& kernel, const CouplingTable<double>& table,
                     std::uint64_t seed = 1, int max_sites = 256);

}  // namespace spincool
