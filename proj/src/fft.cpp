#include "spadcam/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "spadcam/core.hpp"
#include "spadcam/simd/kernels.hpp"

namespace spadcam {

// FFTW planning is not thread-safe; execution through the new-array API is.
// Plans are cached per length and never destroyed.
struct RealFft::Plans {
  fftw_plan forward{nullptr};
  fftw_plan inverse{nullptr};
};

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<const RealFft::Plans> plans_for(std::size_t n) {
  static std::map<std::size_t, std::shared_ptr<RealFft::Plans>> cache;
  std::lock_guard lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  auto plans = std::make_shared<RealFft::Plans>();
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const int len = static_cast<int>(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans->forward = fftw_plan_dft_r2c_1d(len, real.data(), cplx, flags | FFTW_PRESERVE_INPUT);
  plans->inverse = fftw_plan_dft_c2r_1d(len, cplx, real.data(), flags | FFTW_DESTROY_INPUT);
  if (!plans->forward || !plans->inverse) throw SolverError("FFTW could not plan a length-" + std::to_string(n) + " transform");
  cache.emplace(n, plans);
  return plans;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw ValidationError("FFT length must be positive");
  plans_ = plans_for(n);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != spectrum_size()) throw ValidationError("FFT size mismatch");
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<std::complex<double>> in, std::span<double> out) const {
  if (out.size() != n_ || in.size() != spectrum_size()) throw ValidationError("FFT size mismatch");
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
}

Spectrum RealFft::forward(std::span<const double> in) const {
  Spectrum out(spectrum_size());
  forward(in, out);
  return out;
}

Spectrum circulant_spectrum(const RealFft& fft, std::span<const double> taps) { return fft.forward(taps); }

namespace {
std::vector<double> apply(const RealFft& fft, const Spectrum& spec, std::span<const double> x, bool conj) {
  if (x.size() != fft.size() || spec.size() != fft.spectrum_size())
    throw ValidationError("circulant apply: dimension mismatch");
  Spectrum xs = fft.forward(x);
  auto* p = reinterpret_cast<double*>(xs.data());
  simd::kernels().spectral_multiply(p, reinterpret_cast<const double*>(spec.data()), p, xs.size(), conj);
  std::vector<double> y(fft.size());
  fft.inverse(xs, y);
  return y;
}
}  // namespace

std::vector<double> apply_circulant(const RealFft& fft, const Spectrum& spec, std::span<const double> x) {
  return apply(fft, spec, x, true);
}

std::vector<double> apply_circulant_transpose(const RealFft& fft, const Spectrum& spec,
                                              std::span<const double> x) {
  return apply(fft, spec, x, false);
}

}  // namespace spadcam
