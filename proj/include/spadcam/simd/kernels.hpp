// ============================================================================
// kernels.hpp -- data-parallel inner loops, one implementation per ISA
//
// Every kernel exists as a scalar reference and, where the CPU allows, an
// AVX2 variant. The table is picked once at first use. Elementwise kernels
// produce identical bits on every path (same operation order, no FMA);
// reductions may differ in the last few ulps because lanes are summed in a
// different order.
//
// Complex arrays are interleaved (re, im) doubles, the layout of
// std::complex<double> and fftw_complex.
// ============================================================================
#pragma once

#include <cstddef>
#include <string_view>

namespace spadcam::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // out = S_tau(x), soft thresholding.
  void (*shrink)(const double* x, double* out, std::size_t len, double tau);
  // out = max(x, floor).
  void (*clamp_floor)(const double* x, double* out, std::size_t len, double floor);
  // out = 2*sqrt(x + 3/8).
  void (*anscombe)(const double* x, double* out, std::size_t len);

  // ADMM split update for an l1 block. With t = ax + u:
  //   z_new = S_tau(t), z_delta = z_new - z, u += ax - z_new, z = z_new.
  // Returns sum (ax - z_new)^2, the squared primal residual of the block.
  double (*shrink_step)(const double* ax, double* z, double* u, double* z_delta, std::size_t len,
                        double tau);
  // Same split update with the projection max(t, floor) in place of S_tau.
  double (*project_step)(const double* x, double* z, double* u, double* z_delta, std::size_t len,
                         double floor);

  // out = a - b
  void (*sub)(const double* a, const double* b, double* out, std::size_t len);
  // out = scale * ((a - 2*b) + c)
  void (*second_diff)(const double* a, const double* b, const double* c, double* out,
                      std::size_t len, double scale);
  // out += a - b
  void (*acc_sub)(double* out, const double* a, const double* b, std::size_t len);
  // out += scale * ((a - 2*b) + c)
  void (*acc_second_diff)(double* out, const double* a, const double* b, const double* c,
                          std::size_t len, double scale);
  // out = a + alpha * (b - c)
  void (*add_scaled_diff)(const double* a, const double* b, const double* c, double* out,
                          std::size_t len, double alpha);
  // out = alpha * x + beta * y
  void (*axpby)(const double* x, const double* y, double* out, std::size_t len, double alpha,
                double beta);

  // spec[k] /= denom[k] for k < bins (complex by real).
  void (*spectral_divide)(double* spec, const double* denom, std::size_t bins);
  // out[k] = x[k] * (conj ? conj(h[k]) : h[k]) for k < bins.
  void (*spectral_multiply)(const double* x, const double* h, double* out, std::size_t bins,
                            bool conj);

  double (*sum_sq)(const double* x, std::size_t len);
  double (*abs_sum)(const double* x, std::size_t len);
  double (*sum)(const double* x, std::size_t len);
};

/// Table selected for this machine. Honors SPADCAM_SIMD=scalar|avx2.
const KernelTable& kernels();

/// Explicit table for an ISA, or nullptr when the CPU or build lacks it.
const KernelTable* kernels_for(Isa isa);

const KernelTable& scalar_kernels();
#if defined(SPADCAM_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

}  // namespace spadcam::simd
