// ============================================================================
// fft.hpp -- real-input DFT of fixed length, backed by FFTW
//
// Every linear operator in the toolkit is a circulant on a length-n vector,
// so one real DFT of length n diagonalizes all of them. A circulant is
// described by its taps c: (A x)_k = sum_d c[d] * x[(k + d) mod n], which
// matches the first-row layout of the illumination matrix. In the frequency
// domain A acts as multiplication by conj(DFT(c)) and A^T by DFT(c).
// ============================================================================
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace spadcam {

using Spectrum = std::vector<std::complex<double>>;

class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  /// Unnormalized forward transform; out has spectrum_size() bins.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Inverse transform including the 1/n factor. `in` is used as scratch.
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const;

  Spectrum forward(std::span<const double> in) const;

  struct Plans;

 private:
  std::size_t n_;
  std::shared_ptr<const Plans> plans_;
};

/// Spectrum of the circulant with the given taps (the plain DFT of the taps).
Spectrum circulant_spectrum(const RealFft& fft, std::span<const double> taps);

/// y = A x and y = A^T x for the circulant whose tap spectrum is `spec`.
std::vector<double> apply_circulant(const RealFft& fft, const Spectrum& spec, std::span<const double> x);
std::vector<double> apply_circulant_transpose(const RealFft& fft, const Spectrum& spec,
                                              std::span<const double> x);

}  // namespace spadcam
