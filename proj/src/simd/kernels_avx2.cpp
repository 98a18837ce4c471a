// AVX2 variants. Compiled with -mavx2 only (no -mfma) so every elementwise
// kernel rounds exactly like its scalar twin.
#include <immintrin.h>

#include <cmath>

#include "spadcam/simd/kernels.hpp"

namespace spadcam::simd {
namespace {

constexpr std::size_t kLanes = 4;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double soft(double t, double tau) {
  if (t > tau) return t - tau;
  if (t < -tau) return t + tau;
  return 0.0;
}

// t - clamp(t, -tau, tau) equals the three-branch soft threshold bit for bit.
inline __m256d soft(__m256d t, __m256d tau, __m256d neg_tau) {
  const __m256d c = _mm256_min_pd(_mm256_max_pd(t, neg_tau), tau);
  return _mm256_sub_pd(t, c);
}

void shrink(const double* x, double* out, std::size_t len, double tau) {
  const __m256d vt = _mm256_set1_pd(tau), vn = _mm256_set1_pd(-tau);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes)
    _mm256_storeu_pd(out + i, soft(_mm256_loadu_pd(x + i), vt, vn));
  for (; i < len; ++i) out[i] = soft(x[i], tau);
}

void clamp_floor(const double* x, double* out, std::size_t len, double floor) {
  const __m256d vf = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), vf));
  for (; i < len; ++i) out[i] = x[i] > floor ? x[i] : floor;
}

void anscombe(const double* x, double* out, std::size_t len) {
  const __m256d c = _mm256_set1_pd(0.375), two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes)
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(two, _mm256_sqrt_pd(_mm256_add_pd(_mm256_loadu_pd(x + i), c))));
  for (; i < len; ++i) out[i] = 2.0 * std::sqrt(x[i] + 0.375);
}

double shrink_step(const double* ax, double* z, double* u, double* z_delta, std::size_t len,
                   double tau) {
  const __m256d vt = _mm256_set1_pd(tau), vn = _mm256_set1_pd(-tau);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d a = _mm256_loadu_pd(ax + i);
    const __m256d uu = _mm256_loadu_pd(u + i);
    const __m256d zn = soft(_mm256_add_pd(a, uu), vt, vn);
    const __m256d r = _mm256_sub_pd(a, zn);
    _mm256_storeu_pd(z_delta + i, _mm256_sub_pd(zn, _mm256_loadu_pd(z + i)));
    _mm256_storeu_pd(z + i, zn);
    _mm256_storeu_pd(u + i, _mm256_add_pd(uu, r));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(r, r));
  }
  double total = hsum(acc);
  for (; i < len; ++i) {
    const double zn = soft(ax[i] + u[i], tau);
    const double r = ax[i] - zn;
    z_delta[i] = zn - z[i];
    z[i] = zn;
    u[i] = u[i] + r;
    total += r * r;
  }
  return total;
}

double project_step(const double* x, double* z, double* u, double* z_delta, std::size_t len,
                    double floor) {
  const __m256d vf = _mm256_set1_pd(floor);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d a = _mm256_loadu_pd(x + i);
    const __m256d uu = _mm256_loadu_pd(u + i);
    const __m256d zn = _mm256_max_pd(_mm256_add_pd(a, uu), vf);
    const __m256d r = _mm256_sub_pd(a, zn);
    _mm256_storeu_pd(z_delta + i, _mm256_sub_pd(zn, _mm256_loadu_pd(z + i)));
    _mm256_storeu_pd(z + i, zn);
    _mm256_storeu_pd(u + i, _mm256_add_pd(uu, r));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(r, r));
  }
  double total = hsum(acc);
  for (; i < len; ++i) {
    const double t = x[i] + u[i];
    const double zn = t > floor ? t : floor;
    const double r = x[i] - zn;
    z_delta[i] = zn - z[i];
    z[i] = zn;
    u[i] = u[i] + r;
    total += r * r;
  }
  return total;
}

void sub(const double* a, const double* b, double* out, std::size_t len) {
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < len; ++i) out[i] = a[i] - b[i];
}

inline __m256d second(const double* a, const double* b, const double* c, std::size_t i,
                      __m256d two, __m256d scale) {
  const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_mul_pd(two, _mm256_loadu_pd(b + i)));
  return _mm256_mul_pd(scale, _mm256_add_pd(t, _mm256_loadu_pd(c + i)));
}

void second_diff(const double* a, const double* b, const double* c, double* out, std::size_t len,
                 double scale) {
  const __m256d two = _mm256_set1_pd(2.0), vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) _mm256_storeu_pd(out + i, second(a, b, c, i, two, vs));
  for (; i < len; ++i) out[i] = scale * ((a[i] - 2.0 * b[i]) + c[i]);
}

void acc_sub(double* out, const double* a, const double* b, std::size_t len) {
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), d));
  }
  for (; i < len; ++i) out[i] += a[i] - b[i];
}

void acc_second_diff(double* out, const double* a, const double* b, const double* c,
                     std::size_t len, double scale) {
  const __m256d two = _mm256_set1_pd(2.0), vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), second(a, b, c, i, two, vs)));
  for (; i < len; ++i) out[i] += scale * ((a[i] - 2.0 * b[i]) + c[i]);
}

void add_scaled_diff(const double* a, const double* b, const double* c, double* out,
                     std::size_t len, double alpha) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(b + i), _mm256_loadu_pd(c + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_mul_pd(va, d)));
  }
  for (; i < len; ++i) out[i] = a[i] + alpha * (b[i] - c[i]);
}

void axpby(const double* x, const double* y, double* out, std::size_t len, double alpha, double beta) {
  const __m256d va = _mm256_set1_pd(alpha), vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(ax, _mm256_mul_pd(vb, _mm256_loadu_pd(y + i))));
  }
  for (; i < len; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void spectral_divide(double* spec, const double* denom, std::size_t bins) {
  std::size_t k = 0;
  for (; k + 2 <= bins; k += 2) {
    const __m256d d =
        _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(denom + k)), 0x50);
    _mm256_storeu_pd(spec + 2 * k, _mm256_div_pd(_mm256_loadu_pd(spec + 2 * k), d));
  }
  for (; k < bins; ++k) {
    spec[2 * k] /= denom[k];
    spec[2 * k + 1] /= denom[k];
  }
}

void spectral_multiply(const double* x, const double* h, double* out, std::size_t bins, bool conj) {
  const __m256d flip = _mm256_set1_pd(conj ? -1.0 : 1.0);
  std::size_t k = 0;
  for (; k + 2 <= bins; k += 2) {
    const __m256d vx = _mm256_loadu_pd(x + 2 * k);
    const __m256d vh = _mm256_loadu_pd(h + 2 * k);
    const __m256d hr = _mm256_movedup_pd(vh);
    const __m256d hi = _mm256_mul_pd(flip, _mm256_permute_pd(vh, 0xF));
    const __m256d xs = _mm256_permute_pd(vx, 0x5);
    _mm256_storeu_pd(out + 2 * k, _mm256_addsub_pd(_mm256_mul_pd(vx, hr), _mm256_mul_pd(xs, hi)));
  }
  const double sign = conj ? -1.0 : 1.0;
  for (; k < bins; ++k) {
    const double xr = x[2 * k], xi = x[2 * k + 1];
    const double hr = h[2 * k], hi = sign * h[2 * k + 1];
    out[2 * k] = xr * hr - xi * hi;
    out[2 * k + 1] = xr * hi + xi * hr;
  }
}

double sum_sq(const double* x, std::size_t len) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double total = hsum(acc);
  for (; i < len; ++i) total += x[i] * x[i];
  return total;
}

double abs_sum(const double* x, std::size_t len) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(x + i), mask));
  double total = hsum(acc);
  for (; i < len; ++i) total += std::fabs(x[i]);
  return total;
}

double sum(const double* x, std::size_t len) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= len; i += kLanes) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < len; ++i) total += x[i];
  return total;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      Isa::avx2,       "avx2",        shrink,          clamp_floor,      anscombe,
      shrink_step,     project_step,  sub,             second_diff,      acc_sub,
      acc_second_diff, add_scaled_diff, axpby, spectral_divide, spectral_multiply, sum_sq,
      abs_sum,         sum,
  };
  return table;
}

}  // namespace spadcam::simd
